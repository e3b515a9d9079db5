//! Discrete geometry and measures: velocity quadrature for the Gaussian
//! measure, the spatial mesh for the unit slab, the confining potential, and
//! the weighted cell/wall measures built from them.
//!
//! Velocity space is truncated to `[-V_max, V_max]` and discretized by `N_v`
//! offset-symmetric nodes
//!
//! ```text
//!     v_j = (j - N_v/2 + 1/2) dv,      dv = 2 V_max / N_v,
//! ```
//!
//! so no node sits at `v = 0` (the discrete grazing set is empty) and
//! `j <-> N_v-1-j` realizes `v -> -v` as an exact index permutation: the
//! mirrored node is the bitwise negation of the original, so Gaussian weights
//! of mirror nodes are bitwise equal and odd-in-v sums cancel exactly when
//! reduced over mirror pairs. Quadrature uses raw weights `w_j = mu(v_j) dv`
//! with the normalizer `Z = sum_j w_j` kept separate: raw weights keep the
//! Fokker-Planck flux form exactly conservative, while `Z` enters only the
//! velocity-average projection.
//!
//! Space is the unit interval tiled by `N_x` cells with centers
//! `x_i = (i+1/2) dx`. A Lipschitz potential `phi` enters through cell and
//! face values of `exp(-phi)`; the drift coefficient stored per cell is the
//! discrete logarithmic slope
//!
//! ```text
//!     drift_i = (e^{-phi_{i-1/2}} - e^{-phi_{i+1/2}}) / (e^{-phi_i} dx),
//! ```
//!
//! chosen so that the phase-space flux field built in the transport module
//! has exactly zero discrete divergence (constants are stationary states of
//! discrete transport for every potential, not just up to truncation error).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};

/// `1/sqrt(2 pi)`, the Gaussian normalization in one velocity dimension.
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// The unit Gaussian `mu(v) = (2 pi)^{-1/2} exp(-v^2/2)`.
#[inline]
pub fn maxwellian(v: f64) -> f64 {
    INV_SQRT_2PI * libm::exp(-0.5 * v * v)
}

/// Reduce `term(j)` over all velocity indices by mirror pairs
/// `(j, N_v-1-j)`, `j < N_v/2`. Fixed order; makes odd-in-v summands cancel
/// exactly instead of leaving partial-sum rounding residue.
#[inline]
pub(crate) fn mirror_pair_sum(n_v: usize, term: impl Fn(usize) -> f64) -> f64 {
    let mut acc = 0.0;
    for j in 0..n_v / 2 {
        acc += term(j) + term(n_v - 1 - j);
    }
    acc
}

/// Offset-symmetric velocity nodes with Gaussian quadrature weights.
#[derive(Debug, Clone)]
pub struct VelocityGrid {
    n_v: usize,
    v_max: f64,
    dv: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Discrete antiderivative of `-v mu(v)` on the `N_v + 1` cell faces:
    /// `drift_faces[k] = -sum_{j<k} v_j w_j`, mirrored onto the upper half so
    /// both cutoff faces carry exactly zero. Using these as face weights for
    /// the velocity drift term makes the Gaussian an exact discrete steady
    /// state of phase-space advection.
    drift_faces: Vec<f64>,
    /// `mu` evaluated at the literal face positions `-V_max + k dv`; the
    /// Fokker-Planck flux form is defined with these.
    maxwellian_faces: Vec<f64>,
    z: f64,
    s_plus: f64,
    s_minus: f64,
    second_moment: f64,
}

impl VelocityGrid {
    /// Build the grid. Requires `N_v >= 8` even and `V_max >= 4` (Gaussian
    /// tail at the cutoff below `3e-4`; the default `V_max = 8` puts it below
    /// `1e-14`).
    pub fn new(n_v: usize, v_max: f64) -> Result<Self> {
        if n_v < 8 || n_v % 2 != 0 {
            return Err(CoreError::config(format!(
                "velocity node count must be even and at least 8, got {n_v}"
            )));
        }
        if !v_max.is_finite() || v_max < 4.0 {
            return Err(CoreError::config(format!(
                "velocity cutoff must be finite and at least 4, got {v_max}"
            )));
        }
        let dv = 2.0 * v_max / n_v as f64;
        let half = n_v / 2;

        let mut nodes = vec![0.0; n_v];
        for (j, node) in nodes.iter_mut().enumerate() {
            // Mirror node is the exact IEEE negation: (j - half + 1/2) flips
            // sign exactly under j -> n_v-1-j, and multiplying by dv keeps it.
            *node = (j as f64 - half as f64 + 0.5) * dv;
        }
        let weights: Vec<f64> = nodes.iter().map(|&v| maxwellian(v) * dv).collect();

        let z = mirror_pair_sum(n_v, |j| weights[j]);
        let second_moment = mirror_pair_sum(n_v, |j| weights[j] * nodes[j] * nodes[j]) / z;

        // Half-range first moments. Summing the negative half downward from
        // the center makes its term sequence bitwise identical to the
        // positive half's, so s_plus == s_minus exactly.
        let mut s_plus = 0.0;
        for j in half..n_v {
            s_plus += weights[j] * nodes[j];
        }
        let mut s_minus = 0.0;
        for j in (0..half).rev() {
            s_minus += weights[j] * -nodes[j];
        }

        let mut drift_faces = vec![0.0; n_v + 1];
        for k in 1..=half {
            drift_faces[k] = drift_faces[k - 1] - nodes[k - 1] * weights[k - 1];
        }
        for k in half + 1..=n_v {
            drift_faces[k] = drift_faces[n_v - k];
        }

        let maxwellian_faces: Vec<f64> = (0..=n_v)
            .map(|k| maxwellian(-v_max + k as f64 * dv))
            .collect();

        Ok(VelocityGrid {
            n_v,
            v_max,
            dv,
            nodes,
            weights,
            drift_faces,
            maxwellian_faces,
            z,
            s_plus,
            s_minus,
            second_moment,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n_v
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn node(&self, j: usize) -> f64 {
        self.nodes[j]
    }

    #[inline]
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    #[inline]
    pub fn weight(&self, j: usize) -> f64 {
        self.weights[j]
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn dv(&self) -> f64 {
        self.dv
    }

    #[inline]
    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    /// Quadrature normalizer `Z = sum_j w_j` (close to, and at most, 1).
    #[inline]
    pub fn z(&self) -> f64 {
        self.z
    }

    /// `S+ = sum_{v_j > 0} w_j v_j`.
    #[inline]
    pub fn s_plus(&self) -> f64 {
        self.s_plus
    }

    /// `S- = sum_{v_j < 0} w_j |v_j|`; equals `S+` bitwise.
    #[inline]
    pub fn s_minus(&self) -> f64 {
        self.s_minus
    }

    /// Index of the node at `-v_j`.
    #[inline]
    pub fn mirror(&self, j: usize) -> usize {
        self.n_v - 1 - j
    }

    /// Discrete-antiderivative face weight for the drift term, `k = 0..=N_v`.
    #[inline]
    pub fn drift_face(&self, k: usize) -> f64 {
        self.drift_faces[k]
    }

    /// `mu` at the literal face position `-V_max + k dv`.
    #[inline]
    pub fn maxwellian_face(&self, k: usize) -> f64 {
        self.maxwellian_faces[k]
    }

    /// `|Z - 1|`: quadrature defect of the zeroth Gaussian moment.
    #[inline]
    pub fn normalization_defect(&self) -> f64 {
        libm::fabs(self.z - 1.0)
    }

    /// `|sum_j w_j v_j^2 / Z - 1|`: quadrature defect of the second moment.
    #[inline]
    pub fn second_moment_defect(&self) -> f64 {
        libm::fabs(self.second_moment - 1.0)
    }

    /// Discrete `<v^2>`.
    #[inline]
    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }
}

/// The two walls of the slab with their outward normals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wall {
    Left,
    Right,
}

impl Wall {
    pub const BOTH: [Wall; 2] = [Wall::Left, Wall::Right];

    /// Outward normal: -1 at the left wall, +1 at the right wall.
    #[inline]
    pub fn normal(self) -> f64 {
        match self {
            Wall::Left => -1.0,
            Wall::Right => 1.0,
        }
    }

    /// Wall position in the slab coordinate.
    #[inline]
    pub fn position(self) -> f64 {
        match self {
            Wall::Left => 0.0,
            Wall::Right => 1.0,
        }
    }

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Wall::Left => 0,
            Wall::Right => 1,
        }
    }
}

/// Uniform cell mesh on the unit interval.
#[derive(Debug, Clone)]
pub struct SpatialGrid {
    n_x: usize,
    dx: f64,
    centers: Vec<f64>,
}

impl SpatialGrid {
    /// Build the mesh. Requires `N_x >= 4` so interior three-point stencils
    /// exist away from both walls.
    pub fn new(n_x: usize) -> Result<Self> {
        if n_x < 4 {
            return Err(CoreError::config(format!(
                "spatial cell count must be at least 4, got {n_x}"
            )));
        }
        let dx = 1.0 / n_x as f64;
        let centers = (0..n_x).map(|i| (i as f64 + 0.5) * dx).collect();
        Ok(SpatialGrid { n_x, dx, centers })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n_x
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.dx
    }

    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        self.centers[i]
    }

    #[inline]
    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Face position `x_{i-1/2} = i dx`, `i = 0..=N_x`.
    #[inline]
    pub fn face(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }
}

/// Analytic or tabulated confining potential on the slab.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    Zero,
    /// `phi(x) = slope * x`.
    Linear {
        slope: f64,
    },
    /// `phi(x) = amplitude * cos(pi x)`.
    Cosine {
        amplitude: f64,
    },
    /// Piecewise-linear interpolation of `(x, phi)` samples covering `[0,1]`.
    Table {
        x: Vec<f64>,
        phi: Vec<f64>,
    },
}

impl PotentialSpec {
    fn validate(&self) -> Result<()> {
        match self {
            PotentialSpec::Zero => Ok(()),
            PotentialSpec::Linear { slope } => {
                if slope.is_finite() {
                    Ok(())
                } else {
                    Err(CoreError::config("linear potential slope must be finite"))
                }
            }
            PotentialSpec::Cosine { amplitude } => {
                if amplitude.is_finite() {
                    Ok(())
                } else {
                    Err(CoreError::config(
                        "cosine potential amplitude must be finite",
                    ))
                }
            }
            PotentialSpec::Table { x, phi } => {
                if x.len() < 2 || x.len() != phi.len() {
                    return Err(CoreError::config(format!(
                        "tabulated potential needs matching x/phi columns with \
                         at least 2 rows, got {} and {}",
                        x.len(),
                        phi.len()
                    )));
                }
                if x.windows(2).any(|p| !(p[1] > p[0])) {
                    return Err(CoreError::config(
                        "tabulated potential abscissae must be strictly increasing",
                    ));
                }
                if x[0] > 0.0 || x[x.len() - 1] < 1.0 {
                    return Err(CoreError::config(
                        "tabulated potential must cover the whole interval [0, 1]",
                    ));
                }
                if phi.iter().any(|p| !p.is_finite()) {
                    return Err(CoreError::config(
                        "tabulated potential values must be finite",
                    ));
                }
                Ok(())
            }
        }
    }

    /// Point value; `Table` interpolates linearly between samples.
    pub fn value_at(&self, pos: f64) -> f64 {
        match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Linear { slope } => slope * pos,
            PotentialSpec::Cosine { amplitude } => {
                amplitude * libm::cos(core::f64::consts::PI * pos)
            }
            PotentialSpec::Table { x, phi } => {
                let n = x.len();
                if pos <= x[0] {
                    return phi[0];
                }
                if pos >= x[n - 1] {
                    return phi[n - 1];
                }
                let k = x.partition_point(|&xi| xi <= pos).min(n - 1);
                let (x0, x1) = (x[k - 1], x[k]);
                let t = (pos - x0) / (x1 - x0);
                phi[k - 1] * (1.0 - t) + phi[k] * t
            }
        }
    }
}

/// Potential sampled on the mesh, with the cached exponential weights and the
/// well-balanced drift coefficient used by transport.
#[derive(Debug, Clone)]
pub struct Potential {
    centers: Vec<f64>,
    faces: Vec<f64>,
    face_slopes: Vec<f64>,
    lipschitz: f64,
    exp_neg_centers: Vec<f64>,
    exp_neg_faces: Vec<f64>,
    drift_centers: Vec<f64>,
}

impl Potential {
    pub fn new(spec: &PotentialSpec, space: &SpatialGrid) -> Result<Self> {
        spec.validate()?;
        let n_x = space.len();
        let dx = space.dx();

        let centers: Vec<f64> = space.centers().iter().map(|&x| spec.value_at(x)).collect();
        let faces: Vec<f64> = (0..=n_x).map(|i| spec.value_at(space.face(i))).collect();

        // Interior face slopes between adjacent centers; half-cell one-sided
        // slopes at the walls so the Lipschitz estimate sees the wall layer.
        let mut face_slopes = vec![0.0; n_x + 1];
        face_slopes[0] = (centers[0] - faces[0]) / (0.5 * dx);
        for i in 1..n_x {
            face_slopes[i] = (centers[i] - centers[i - 1]) / dx;
        }
        face_slopes[n_x] = (faces[n_x] - centers[n_x - 1]) / (0.5 * dx);

        let exp_neg_centers: Vec<f64> = centers.iter().map(|&p| libm::exp(-p)).collect();
        let exp_neg_faces: Vec<f64> = faces.iter().map(|&p| libm::exp(-p)).collect();

        let mut drift_centers = vec![0.0; n_x];
        for i in 0..n_x {
            drift_centers[i] =
                (exp_neg_faces[i] - exp_neg_faces[i + 1]) / (exp_neg_centers[i] * dx);
        }

        let mut lipschitz: f64 = 0.0;
        for s in face_slopes.iter().chain(drift_centers.iter()) {
            lipschitz = lipschitz.max(libm::fabs(*s));
        }
        if !lipschitz.is_finite() {
            return Err(CoreError::config(
                "potential slope bound is not finite on this mesh",
            ));
        }

        Ok(Potential {
            centers,
            faces,
            face_slopes,
            lipschitz,
            exp_neg_centers,
            exp_neg_faces,
            drift_centers,
        })
    }

    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        self.centers[i]
    }

    /// Face value `phi(x_{i-1/2})`; indices `0..=N_x`, ends are the walls.
    #[inline]
    pub fn face(&self, i: usize) -> f64 {
        self.faces[i]
    }

    #[inline]
    pub fn face_slope(&self, i: usize) -> f64 {
        self.face_slopes[i]
    }

    /// Lipschitz bound `L_phi`: the largest discrete slope magnitude.
    #[inline]
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    #[inline]
    pub fn exp_neg_center(&self, i: usize) -> f64 {
        self.exp_neg_centers[i]
    }

    #[inline]
    pub fn exp_neg_face(&self, i: usize) -> f64 {
        self.exp_neg_faces[i]
    }

    #[inline]
    pub fn exp_neg_wall(&self, wall: Wall) -> f64 {
        match wall {
            Wall::Left => self.exp_neg_faces[0],
            Wall::Right => self.exp_neg_faces[self.exp_neg_faces.len() - 1],
        }
    }

    #[inline]
    pub fn wall_value(&self, wall: Wall) -> f64 {
        match wall {
            Wall::Left => self.faces[0],
            Wall::Right => self.faces[self.faces.len() - 1],
        }
    }

    /// Well-balanced cell drift, a second-order approximation of
    /// `phi'(x_i)` consistent with the face exponentials.
    #[inline]
    pub fn drift(&self, i: usize) -> f64 {
        self.drift_centers[i]
    }
}

/// Quadrature weights of the weighted phase-space measure and its boundary
/// trace measure.
#[derive(Debug, Clone)]
pub struct MeasureWeights {
    /// `m_ij = e^{-phi_i} w_j dx / Z`, row-major over `(i, j)`.
    cell: Vec<f64>,
    /// `b_j = e^{-phi(wall)} w_j / Z`, one vector per wall.
    wall: [Vec<f64>; 2],
    /// `e^{-phi_i} dx`: weights of the macroscopic inner product.
    x_cell: Vec<f64>,
    /// `sum_ij m_ij` (equals the discrete `int e^{-phi} dx`).
    total: f64,
    /// `sum_i e^{-phi_i} dx`.
    x_total: f64,
}

impl MeasureWeights {
    fn new(velocity: &VelocityGrid, space: &SpatialGrid, potential: &Potential) -> Self {
        let n_x = space.len();
        let n_v = velocity.len();
        let z = velocity.z();
        let dx = space.dx();

        let mut cell = vec![0.0; n_x * n_v];
        let mut x_cell = vec![0.0; n_x];
        let mut x_total = 0.0;
        for i in 0..n_x {
            let wx = potential.exp_neg_center(i) * dx;
            x_cell[i] = wx;
            x_total += wx;
            for j in 0..n_v {
                cell[i * n_v + j] = wx * velocity.weight(j) / z;
            }
        }
        let total = x_cell
            .iter()
            .map(|&wx| wx * mirror_pair_sum(n_v, |j| velocity.weight(j) / z))
            .sum();

        let wall = [Wall::Left, Wall::Right].map(|w| {
            let ew = potential.exp_neg_wall(w);
            (0..n_v).map(|j| ew * velocity.weight(j) / z).collect()
        });

        MeasureWeights {
            cell,
            wall,
            x_cell,
            total,
            x_total,
        }
    }

    /// Cell weight `m_ij` by flat index `i * N_v + j`.
    #[inline]
    pub fn cell(&self, flat: usize) -> f64 {
        self.cell[flat]
    }

    #[inline]
    pub fn cells(&self) -> &[f64] {
        &self.cell
    }

    /// Wall weight `b_{wall,j}`.
    #[inline]
    pub fn wall(&self, wall: Wall, j: usize) -> f64 {
        self.wall[wall.index()][j]
    }

    /// Macroscopic cell weight `e^{-phi_i} dx`.
    #[inline]
    pub fn x_cell(&self, i: usize) -> f64 {
        self.x_cell[i]
    }

    #[inline]
    pub fn x_cells(&self) -> &[f64] {
        &self.x_cell
    }

    /// Total phase-space measure `sum_ij m_ij`.
    #[inline]
    pub fn total(&self) -> f64 {
        self.total
    }

    /// Total spatial measure `sum_i e^{-phi_i} dx`.
    #[inline]
    pub fn x_total(&self) -> f64 {
        self.x_total
    }
}

/// The full discretization bundle shared by every operator: velocity and
/// space grids, sampled potential, and the derived measures. Immutable after
/// construction; safe to share read-only across parallel workers.
#[derive(Debug, Clone)]
pub struct Domain {
    velocity: VelocityGrid,
    space: SpatialGrid,
    potential: Potential,
    measure: MeasureWeights,
}

impl Domain {
    pub fn new(velocity: VelocityGrid, space: SpatialGrid, spec: &PotentialSpec) -> Result<Self> {
        let potential = Potential::new(spec, &space)?;
        let measure = MeasureWeights::new(&velocity, &space, &potential);
        Ok(Domain {
            velocity,
            space,
            potential,
            measure,
        })
    }

    /// Convenience builder from raw sizes.
    pub fn build(n_x: usize, n_v: usize, v_max: f64, spec: &PotentialSpec) -> Result<Self> {
        Domain::new(VelocityGrid::new(n_v, v_max)?, SpatialGrid::new(n_x)?, spec)
    }

    #[inline]
    pub fn velocity(&self) -> &VelocityGrid {
        &self.velocity
    }

    #[inline]
    pub fn space(&self) -> &SpatialGrid {
        &self.space
    }

    #[inline]
    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    #[inline]
    pub fn measure(&self) -> &MeasureWeights {
        &self.measure
    }

    #[inline]
    pub fn n_x(&self) -> usize {
        self.space.len()
    }

    #[inline]
    pub fn n_v(&self) -> usize {
        self.velocity.len()
    }

    /// Flat index of `(x_i, v_j)` in row-major field storage.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.velocity.len() + j
    }

    /// Weighted phase-space inner product `sum_ij m_ij F_ij G_ij`.
    ///
    /// Velocity sums reduce over mirror pairs in a fixed order, so odd-in-v
    /// integrands vanish exactly and results are independent of worker count.
    pub fn inner_dm(&self, f: &[f64], g: &[f64]) -> f64 {
        let n_v = self.velocity.len();
        debug_assert_eq!(f.len(), self.n_x() * n_v);
        debug_assert_eq!(g.len(), f.len());
        let mut acc = 0.0;
        for i in 0..self.n_x() {
            let row = i * n_v;
            acc += mirror_pair_sum(n_v, |j| {
                self.measure.cell(row + j) * f[row + j] * g[row + j]
            });
        }
        acc
    }

    /// Norm induced by [`Domain::inner_dm`].
    #[inline]
    pub fn norm_dm(&self, f: &[f64]) -> f64 {
        libm::sqrt(self.inner_dm(f, f).max(0.0))
    }

    /// `sum_ij m_ij F_ij`: the total weighted mass of a phase-space field.
    pub fn integral_dm(&self, f: &[f64]) -> f64 {
        let n_v = self.velocity.len();
        let mut acc = 0.0;
        for i in 0..self.n_x() {
            let row = i * n_v;
            acc += mirror_pair_sum(n_v, |j| self.measure.cell(row + j) * f[row + j]);
        }
        acc
    }

    /// Weighted macroscopic inner product `sum_i e^{-phi_i} dx rho_i sigma_i`.
    pub fn inner_x(&self, rho: &[f64], sigma: &[f64]) -> f64 {
        debug_assert_eq!(rho.len(), self.n_x());
        debug_assert_eq!(sigma.len(), rho.len());
        let mut acc = 0.0;
        for i in 0..self.n_x() {
            acc += self.measure.x_cell(i) * rho[i] * sigma[i];
        }
        acc
    }

    /// Norm induced by [`Domain::inner_x`].
    #[inline]
    pub fn norm_x(&self, rho: &[f64]) -> f64 {
        libm::sqrt(self.inner_x(rho, rho).max(0.0))
    }

    /// Copy of the domain with the sign of one velocity quadrature weight
    /// flipped, every derived cache (normalizer, half-range sums, drift
    /// antiderivative, measure weights) rebuilt from the corrupted value.
    ///
    /// Fault-injection hook for verification harnesses: the boundary
    /// identities rest on the mirror symmetry of the weights, so a harness
    /// evaluating them on this domain must report failures. Never use the
    /// result for actual simulation.
    pub fn with_flipped_weight(&self, j: usize) -> Domain {
        let mut velocity = self.velocity.clone();
        velocity.weights[j] = -velocity.weights[j];
        let n_v = velocity.n_v;
        let half = n_v / 2;
        velocity.z = mirror_pair_sum(n_v, |k| velocity.weights[k]);
        velocity.second_moment = mirror_pair_sum(n_v, |k| {
            velocity.weights[k] * velocity.nodes[k] * velocity.nodes[k]
        }) / velocity.z;
        velocity.s_plus = (half..n_v)
            .map(|k| velocity.weights[k] * velocity.nodes[k])
            .sum();
        velocity.s_minus = (0..half)
            .rev()
            .map(|k| velocity.weights[k] * -velocity.nodes[k])
            .sum();
        for k in 1..=half {
            velocity.drift_faces[k] =
                velocity.drift_faces[k - 1] - velocity.nodes[k - 1] * velocity.weights[k - 1];
        }
        for k in half + 1..=n_v {
            velocity.drift_faces[k] = velocity.drift_faces[n_v - k];
        }
        let measure = MeasureWeights::new(&velocity, &self.space, &self.potential);
        Domain {
            velocity,
            space: self.space.clone(),
            potential: self.potential.clone(),
            measure,
        }
    }

    /// Boundary inner product `sum_wall sum_j b_wall_j weight(wall, v_j)
    /// F_wall_j G_wall_j`, with `weight = n . v` giving the signed flux
    /// pairing. Traces are indexed `[left, right]` over all velocity nodes.
    pub fn inner_boundary(
        &self,
        f: [&[f64]; 2],
        g: [&[f64]; 2],
        weight: impl Fn(Wall, f64) -> f64,
    ) -> f64 {
        let n_v = self.velocity.len();
        let mut acc = 0.0;
        for wall in Wall::BOTH {
            let (fw, gw) = (f[wall.index()], g[wall.index()]);
            debug_assert_eq!(fw.len(), n_v);
            debug_assert_eq!(gw.len(), n_v);
            acc += mirror_pair_sum(n_v, |j| {
                self.measure.wall(wall, j) * weight(wall, self.velocity.node(j)) * fw[j] * gw[j]
            });
        }
        acc
    }
}
