//! Synthetic ellipsoid phantoms and their logit fields.
//!
//! A phantom is a rasterized ellipsoid standing in for an organ mask: a voxel
//! is foreground iff its center satisfies sum(((p - c) / r)^2) <= 1 in voxel
//! coordinates. The logit field provides the (mu, sigma) pair a trained
//! segmentation network would emit: mu follows the signed distance to the
//! surface (positive inside) and sigma peaks at the surface, so uncertainty
//! concentrates at the organ boundary.

use crate::error::{Error, Result};
use crate::volume::LabelVolume;

/// Ground-truth organ mask plus its analytic ellipsoid parameters.
#[derive(Debug, Clone)]
pub struct Phantom {
    truth: LabelVolume,
    organ_label: u8,
    center_vox: (f64, f64, f64),
    radii_vox: (f64, f64, f64),
}

impl Phantom {
    pub fn truth(&self) -> &LabelVolume {
        &self.truth
    }

    pub fn organ_label(&self) -> u8 {
        self.organ_label
    }

    pub fn center_vox(&self) -> (f64, f64, f64) {
        self.center_vox
    }

    pub fn radii_vox(&self) -> (f64, f64, f64) {
        self.radii_vox
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.truth.dims()
    }

    pub fn spacing_mm(&self) -> (f64, f64, f64) {
        self.truth.spacing_mm()
    }

    /// Analytic ellipsoid volume in mm^3: 4/3 pi rz ry rx scaled by spacing.
    pub fn analytic_volume_mm3(&self) -> f64 {
        let (rz, ry, rx) = self.radii_vox;
        let (sz, sy, sx) = self.truth.spacing_mm();
        4.0 / 3.0 * std::f64::consts::PI * (rz * sz) * (ry * sy) * (rx * sx)
    }
}

/// Rasterizes an ellipsoid mask. Deterministic given its arguments.
pub fn make_phantom(
    dims: (usize, usize, usize),
    spacing_mm: (f64, f64, f64),
    center_vox: (f64, f64, f64),
    radii_vox: (f64, f64, f64),
    organ_label: u8,
) -> Result<Phantom> {
    let (rz, ry, rx) = radii_vox;
    if !(rz > 0.0 && ry > 0.0 && rx > 0.0) {
        return Err(Error::InvalidVolume(format!("radii must be positive, got {radii_vox:?}")));
    }
    if organ_label == 0 {
        return Err(Error::InvalidVolume("organ label 0 is reserved for background".into()));
    }
    let centers = [center_vox.0, center_vox.1, center_vox.2];
    let radii = [rz, ry, rx];
    let sizes = [dims.0, dims.1, dims.2];
    for axis in 0..3 {
        // the physical grid box spans [-0.5, dim - 0.5] in voxel units
        let lo = centers[axis] - radii[axis];
        let hi = centers[axis] + radii[axis];
        if lo < -0.5 || hi > sizes[axis] as f64 - 0.5 {
            return Err(Error::EllipsoidOutOfBounds(format!(
                "axis {axis}: extent [{lo:.3}, {hi:.3}] outside [-0.5, {:.1}]",
                sizes[axis] as f64 - 0.5
            )));
        }
    }

    let (nz, ny, nx) = dims;
    let mut labels = vec![0u8; nz * ny * nx];
    let (cz, cy, cx) = center_vox;
    let mut idx = 0;
    for z in 0..nz {
        let dz = (z as f64 - cz) / rz;
        let dz2 = dz * dz;
        for y in 0..ny {
            let dy = (y as f64 - cy) / ry;
            let zy2 = dz2 + dy * dy;
            for x in 0..nx {
                let dx = (x as f64 - cx) / rx;
                if zy2 + dx * dx <= 1.0 {
                    labels[idx] = organ_label;
                }
                idx += 1;
            }
        }
    }
    let truth = LabelVolume::new(dims, spacing_mm, labels)?;
    Ok(Phantom { truth, organ_label, center_vox, radii_vox })
}

/// Signed distance (mm) from a voxel center to the ellipsoid surface along
/// the ray through the ellipsoid center; positive inside. Exact at the
/// surface and linear along each radial ray, which is what the logit field
/// needs; it is not the Euclidean distance off-axis.
pub fn radial_signed_distance_mm(
    center_vox: (f64, f64, f64),
    radii_vox: (f64, f64, f64),
    spacing_mm: (f64, f64, f64),
    p_vox: (f64, f64, f64),
) -> f64 {
    let u = [
        (p_vox.0 - center_vox.0) * spacing_mm.0,
        (p_vox.1 - center_vox.1) * spacing_mm.1,
        (p_vox.2 - center_vox.2) * spacing_mm.2,
    ];
    let r_mm = [
        radii_vox.0 * spacing_mm.0,
        radii_vox.1 * spacing_mm.1,
        radii_vox.2 * spacing_mm.2,
    ];
    let q2: f64 = (0..3).map(|k| (u[k] / r_mm[k]) * (u[k] / r_mm[k])).sum();
    let q = q2.sqrt();
    if q == 0.0 {
        // direction undefined at the exact center; use the smallest semi-axis
        return r_mm.iter().cloned().fold(f64::INFINITY, f64::min);
    }
    let norm_u = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    norm_u * (1.0 - q) / q
}

/// Per-voxel signed distance field (mm) for a phantom, positive inside.
pub fn distance_field_mm(phantom: &Phantom) -> Vec<f64> {
    let (nz, ny, nx) = phantom.dims();
    let spacing = phantom.spacing_mm();
    let mut out = Vec::with_capacity(nz * ny * nx);
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                out.push(radial_signed_distance_mm(
                    phantom.center_vox,
                    phantom.radii_vox,
                    spacing,
                    (z as f64, y as f64, x as f64),
                ));
            }
        }
    }
    out
}

/// The (mu, sigma) fields a segmentation network head would emit.
#[derive(Debug, Clone)]
pub struct LogitField {
    dims: (usize, usize, usize),
    spacing_mm: (f64, f64, f64),
    organ_label: u8,
    mu: Vec<f64>,
    sigma: Vec<f64>,
}

impl LogitField {
    pub fn new(
        dims: (usize, usize, usize),
        spacing_mm: (f64, f64, f64),
        organ_label: u8,
        mu: Vec<f64>,
        sigma: Vec<f64>,
    ) -> Result<Self> {
        let n = dims.0 * dims.1 * dims.2;
        if mu.len() != n || sigma.len() != n {
            return Err(Error::InvalidVolume(format!(
                "field length mismatch: mu {}, sigma {}, dims product {}",
                mu.len(),
                sigma.len(),
                n
            )));
        }
        if mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidVolume("mu must be finite everywhere".into()));
        }
        if sigma.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidVolume("sigma must be nonnegative everywhere".into()));
        }
        Ok(Self { dims, spacing_mm, organ_label, mu, sigma })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn spacing_mm(&self) -> (f64, f64, f64) {
        self.spacing_mm
    }

    pub fn organ_label(&self) -> u8 {
        self.organ_label
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }
}

/// Decay rate for sigma: exp(-4.5) ~ 0.011 at the band edge, effectively
/// zero beyond it.
const SIGMA_DECAY: f64 = 4.5;

/// Band width: `noise_band` is in voxels; converted to mm via mean spacing.
pub(crate) fn band_mm(spacing_mm: (f64, f64, f64), band_vox: f64) -> f64 {
    band_vox * (spacing_mm.0 + spacing_mm.1 + spacing_mm.2) / 3.0
}

/// Builds the logit field for a phantom.
///
/// `mu = sharpness * signed_distance_mm` (positive inside) and
/// `sigma = exp(-4.5 (d / band)^2)`, peaking at 1 on the surface and
/// decaying to ~0 beyond `noise_band` voxels.
pub fn phantom_logits(phantom: &Phantom, sharpness: f64, noise_band_vox: f64) -> Result<LogitField> {
    if !(sharpness > 0.0) {
        return Err(Error::InvalidConfig(format!("sharpness must be positive, got {sharpness}")));
    }
    let distances = distance_field_mm(phantom);
    let band = band_mm(phantom.spacing_mm(), noise_band_vox);
    let mu: Vec<f64> = distances.iter().map(|d| sharpness * d).collect();
    let sigma: Vec<f64> = distances
        .iter()
        .map(|d| {
            if band > 0.0 {
                (-SIGMA_DECAY * (d / band) * (d / band)).exp()
            } else if *d == 0.0 {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    LogitField::new(phantom.dims(), phantom.spacing_mm(), phantom.organ_label(), mu, sigma)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subvoxel_ellipsoid_is_one_voxel() {
        let p = make_phantom((5, 5, 5), (1.0, 1.0, 1.0), (2.0, 2.0, 2.0), (0.5, 0.5, 0.5), 1).unwrap();
        assert_eq!(p.truth().count_label(1), 1);
        assert_eq!(p.truth().at(2, 2, 2), 1);
    }

    #[test]
    fn sphere_count_matches_analytic_volume() {
        // radius 5 on isotropic unit spacing: (4/3) pi 125 ~ 523.6
        let p = make_phantom((13, 13, 13), (1.0, 1.0, 1.0), (6.0, 6.0, 6.0), (5.0, 5.0, 5.0), 1).unwrap();
        let count = p.truth().count_label(1) as f64;
        let analytic = 4.0 / 3.0 * std::f64::consts::PI * 125.0;
        assert!((count - analytic).abs() / analytic < 0.10, "count {count} vs {analytic}");
        assert!((p.analytic_volume_mm3() - analytic).abs() < 1e-9);
    }

    #[test]
    fn deterministic_given_arguments() {
        let a = make_phantom((9, 9, 9), (3.0, 2.0, 2.0), (4.0, 4.0, 4.0), (3.0, 3.5, 3.5), 2).unwrap();
        let b = make_phantom((9, 9, 9), (3.0, 2.0, 2.0), (4.0, 4.0, 4.0), (3.0, 3.5, 3.5), 2).unwrap();
        assert_eq!(a.truth(), b.truth());
    }

    #[test]
    fn out_of_bounds_rejected() {
        let r = make_phantom((5, 5, 5), (1.0, 1.0, 1.0), (2.0, 2.0, 2.0), (3.0, 1.0, 1.0), 1);
        assert!(matches!(r, Err(Error::EllipsoidOutOfBounds(_))));
    }

    #[test]
    fn truth_labels_are_background_and_organ_only() {
        let p = make_phantom((9, 9, 9), (1.0, 1.0, 1.0), (4.0, 4.0, 4.0), (3.0, 3.0, 3.0), 7).unwrap();
        assert!(p.truth().labels().iter().all(|&l| l == 0 || l == 7));
        // analytic test matches the rasterized mask
        let (cz, cy, cx) = p.center_vox();
        let (rz, ry, rx) = p.radii_vox();
        for z in 0..9 {
            for y in 0..9 {
                for x in 0..9 {
                    let q2 = ((z as f64 - cz) / rz).powi(2)
                        + ((y as f64 - cy) / ry).powi(2)
                        + ((x as f64 - cx) / rx).powi(2);
                    let expected = if q2 <= 1.0 { 7 } else { 0 };
                    assert_eq!(p.truth().at(z, y, x), expected);
                }
            }
        }
    }

    #[test]
    fn surface_voxel_has_zero_mu() {
        // sphere radius 4 centered at voxel 5: voxel (1,5,5) lies exactly on the surface
        let p = make_phantom((11, 11, 11), (1.0, 1.0, 1.0), (5.0, 5.0, 5.0), (4.0, 4.0, 4.0), 1).unwrap();
        let field = phantom_logits(&p, 1.0, 2.0).unwrap();
        let idx = p.truth().index(1, 5, 5);
        assert!(field.mu()[idx].abs() < 1e-12);
        assert!((field.sigma()[idx] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deep_interior_mu_positive_sigma_negligible() {
        let p = make_phantom((21, 21, 21), (1.0, 1.0, 1.0), (10.0, 10.0, 10.0), (9.0, 9.0, 9.0), 1).unwrap();
        let field = phantom_logits(&p, 1.0, 2.0).unwrap();
        let idx = p.truth().index(10, 10, 10);
        assert!(field.mu()[idx] > 0.0);
        assert!(field.sigma()[idx] < 1e-3);
    }

    #[test]
    fn mu_magnitude_nondecreasing_along_outward_rays() {
        let p = make_phantom((21, 21, 21), (3.0, 2.0, 2.0), (10.0, 10.0, 10.0), (6.0, 7.0, 8.0), 1).unwrap();
        let field = phantom_logits(&p, 0.5, 2.0).unwrap();
        // sample rays from the center outward through a few directions;
        // past the surface |mu| must not decrease
        let dirs = [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.3, 0.7, 0.4), (0.5, 0.5, 0.5)];
        for (dz, dy, dx) in dirs {
            let mut prev: Option<f64> = None;
            for step in 0..40 {
                let t = step as f64 * 0.25;
                let pz = 10.0 + t * dz;
                let py = 10.0 + t * dy;
                let px = 10.0 + t * dx;
                if pz > 20.0 || py > 20.0 || px > 20.0 {
                    break;
                }
                let d = radial_signed_distance_mm(p.center_vox(), p.radii_vox(), p.spacing_mm(), (pz, py, px));
                if d < 0.0 {
                    let mag = 0.5 * d.abs();
                    if let Some(prev) = prev {
                        assert!(mag >= prev - 1e-12, "|mu| decreased along outward ray");
                    }
                    prev = Some(mag);
                }
            }
            assert!(prev.is_some(), "ray never left the ellipsoid");
        }
        // silence unused warning; field mu mirrors the sampled distances
        assert!(field.mu().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn sharpness_must_be_positive() {
        let p = make_phantom((5, 5, 5), (1.0, 1.0, 1.0), (2.0, 2.0, 2.0), (1.5, 1.5, 1.5), 1).unwrap();
        assert!(phantom_logits(&p, 0.0, 2.0).is_err());
    }
}
