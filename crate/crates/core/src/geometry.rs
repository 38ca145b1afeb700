//! Ground and aerial positions.

/// Device location on the ground plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GroundPosition {
    pub x: f64,
    pub y: f64,
}

impl GroundPosition {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dist2(&self, other: &GroundPosition) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(&self, other: &GroundPosition) -> f64 {
        self.dist2(other).sqrt()
    }
}

/// UAV location: ground coordinates plus altitude `h`, all in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UavPosition {
    pub x: f64,
    pub y: f64,
    pub h: f64,
}

impl UavPosition {
    pub const fn new(x: f64, y: f64, h: f64) -> Self {
        Self { x, y, h }
    }

    pub fn ground(&self) -> GroundPosition {
        GroundPosition::new(self.x, self.y)
    }

    pub fn is_valid(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.h.is_finite() && self.h >= 0.0
    }

    /// Squared 3D distance to a ground device.
    pub fn dist2_to_ground(&self, device: &GroundPosition) -> f64 {
        self.ground().dist2(device) + self.h * self.h
    }

    pub fn dist_to_ground(&self, device: &GroundPosition) -> f64 {
        self.dist2_to_ground(device).sqrt()
    }

    /// Squared 3D distance between two UAV positions.
    pub fn dist2(&self, other: &UavPosition) -> f64 {
        let dh = self.h - other.h;
        self.ground().dist2(&other.ground()) + dh * dh
    }

    pub fn dist(&self, other: &UavPosition) -> f64 {
        self.dist2(other).sqrt()
    }

    /// Elevation angle in degrees seen from a ground device.
    pub fn elevation_deg(&self, device: &GroundPosition) -> f64 {
        let d = self.dist_to_ground(device);
        if d == 0.0 {
            return 90.0;
        }
        (self.h / d).clamp(-1.0, 1.0).asin().to_degrees()
    }
}
