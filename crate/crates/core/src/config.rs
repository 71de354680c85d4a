/// Relative tolerances and algorithm limits. Absolute values are derived
/// from the bounding box of the model being processed.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    /// Boundary matching tolerance, relative to the box diagonal.
    pub stitch_rel: f64,
    /// Geometric coincidence tolerance, relative to the box diagonal.
    pub geo_rel: f64,
    /// Iso-plane contouring tolerance, relative to the box span.
    pub contour_rel: f64,
    /// Split-parameter perturbation, relative to the axis span.
    pub perturb_rel: f64,
    pub perturb_retries: usize,
    /// Surface extent threshold for the polyhedral fallback, relative to the diagonal.
    pub eps_e_rel: f64,
    /// Normal cone aperture threshold for the polyhedral fallback, radians.
    pub eps_theta: f64,
    pub max_depth: usize,
    /// Kernel sampling resolutions tried in order.
    pub grids: Vec<usize>,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            stitch_rel: 1e-7,
            geo_rel: 1e-8,
            contour_rel: 1e-6,
            perturb_rel: 1e-6,
            perturb_retries: 3,
            eps_e_rel: 1e-2,
            eps_theta: 0.2,
            max_depth: 24,
            grids: vec![5, 9],
            seed: 0,
        }
    }
}

/// Absolute tolerances for one bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tol {
    pub diag: f64,
    pub span: f64,
    pub stitch: f64,
    pub geo: f64,
    pub contour: f64,
    /// Flattening tolerance for curved trim loops.
    pub flatten: f64,
}

impl Tol {
    pub fn new(cfg: &Config, lo: &[f64], hi: &[f64]) -> Self {
        let ext: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| b - a).collect();
        let diag = ext.iter().map(|e| e * e).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let span = ext.iter().fold(0.0f64, |m, e| m.max(*e)).max(f64::MIN_POSITIVE);
        let stitch = cfg.stitch_rel * diag;
        Tol {
            diag,
            span,
            stitch,
            geo: cfg.geo_rel * diag,
            contour: cfg.contour_rel * span,
            flatten: 0.5 * stitch,
        }
    }

    /// Distance within which two boundary samples are considered coincident.
    pub fn matching(&self) -> f64 {
        self.stitch + self.contour + self.flatten
    }
}
