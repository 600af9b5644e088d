//! Equality-constrained ℓ1 minimization (basis pursuit)
//!
//! ```text
//! minimize ‖c‖₁  subject to  A·c = y,     A = B·Ψ
//! ```
//!
//! solved with ADMM. The `c`-update is the Euclidean projection onto the
//! affine set `{A·c = y}`, which uses a Cholesky factorization of `A·Aᵀ`
//! computed once per operator. The `z`-update is soft
//! thresholding at `1/ρ`.
//!
//! Once ADMM stops, the solution is polished: the least-squares solution on
//! the support of the sparse iterate replaces the ADMM point when it is
//! feasible and has no larger ℓ1 norm. When the support is right this lands
//! exactly on the optimal vertex.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::encoder::NodePacket;
use crate::error::{param_err, Error, Result};
use crate::model::{generate_sensing_matrix, PipelineParams, Seed, SparseBinaryMatrix};
use crate::transform::{TransformBasis, TransformKind};

/// Solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisPursuitConfig {
    pub rho: f64,
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub max_iter: usize,
    /// When set, solve the relaxed problem `‖A·c − y‖₂ ≤ radius` (BPDN)
    /// instead of the equality-constrained one.
    pub noise_radius: Option<f64>,
    /// Re-solve on the detected support after ADMM.
    pub polish: bool,
}

impl Default for BasisPursuitConfig {
    fn default() -> Self {
        BasisPursuitConfig { rho: 1.0, tol_abs: 1e-7, tol_rel: 1e-6, max_iter: 10_000, noise_radius: None, polish: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverReport {
    pub iterations: usize,
    /// `‖A·ĉ − y‖₂` at the returned point.
    pub primal_residual: f64,
    /// Last ADMM dual residual `ρ‖z_k − z_{k−1}‖₂`.
    pub dual_residual: f64,
    /// `‖ĉ‖₁`.
    pub objective: f64,
    pub converged: bool,
    pub polished: bool,
}

/// `A` together with the factorizations the ADMM steps need. Immutable once
/// built, so one instance serves every node and trial.
#[derive(Debug, Clone)]
pub struct BasisPursuitProblem {
    a: DMatrix<f64>,
    // Aᵀ(AAᵀ)⁻¹, so the projection is v − pinv·(A·v − y).
    pinv: DMatrix<f64>,
    // Aᵀ(I + AAᵀ)⁻¹, used only by the noise-ball variant.
    relaxed_pinv: DMatrix<f64>,
}

impl BasisPursuitProblem {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        let (p, q) = a.shape();
        if p == 0 || q == 0 {
            return param_err("sensing operator must be non-empty");
        }
        if p > q {
            return param_err(format!("need p <= q, got {p}x{q} operator"));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("sensing operator has non-finite entries".into()));
        }
        let gram = &a * a.transpose();
        let chol = factor(&gram, "A·Aᵀ")?;
        let pinv = chol.solve(&a).transpose();
        let shifted = gram + DMatrix::identity(p, p);
        let relaxed_pinv = factor(&shifted, "I + A·Aᵀ")?.solve(&a).transpose();
        Ok(BasisPursuitProblem { a, pinv, relaxed_pinv })
    }

    pub fn operator(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn cols(&self) -> usize {
        self.a.ncols()
    }

    /// Projection of `v` onto `{c : A·c = y}`.
    pub fn project(&self, v: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let r = &self.a * v - y;
        v - &self.pinv * r
    }

    pub fn solve(&self, y: &[f64], config: &BasisPursuitConfig) -> Result<(Vec<f64>, SolverReport)> {
        solve_basis_pursuit(self, y, config)
    }
}

fn factor(m: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    let chol = Cholesky::new(m.clone())
        .ok_or_else(|| Error::Numerical(format!("{what} is not positive definite; the sensing operator is rank deficient")))?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| (lo.min(d), hi.max(d)));
    if (lo / hi).powi(2) < 1e-12 {
        return Err(Error::Numerical(format!(
            "{what} is numerically singular (pivot ratio {:.3e}); the sensing operator is rank deficient",
            lo / hi
        )));
    }
    Ok(chol)
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn l1(v: &DVector<f64>) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Solves basis pursuit (or BPDN when `config.noise_radius` is set) for one
/// measurement vector.
pub fn solve_basis_pursuit(
    problem: &BasisPursuitProblem,
    y: &[f64],
    config: &BasisPursuitConfig,
) -> Result<(Vec<f64>, SolverReport)> {
    let (p, q) = problem.a.shape();
    if y.len() != p {
        return param_err(format!("measurement length {} does not match operator rows {p}", y.len()));
    }
    if config.max_iter == 0 || config.rho <= 0.0 {
        return param_err("need max_iter >= 1 and rho > 0");
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("measurements contain non-finite values".into()));
    }
    let y = DVector::from_column_slice(y);
    let y_norm = y.norm();
    let feas_tol = config.tol_abs + config.tol_rel * y_norm;

    let (coeffs, sparse, iterations, dual_residual, admm_converged) = match config.noise_radius {
        None if p == q => {
            // Square and invertible: the feasible set is a single point.
            let c = problem.project(&DVector::zeros(q), &y);
            (c.clone(), c, 0, 0.0, true)
        }
        None => admm_equality(problem, &y, config),
        Some(radius) => {
            if radius < 0.0 {
                return param_err("noise radius must be non-negative");
            }
            admm_ball(problem, &y, radius, config)
        }
    };

    let radius = config.noise_radius.unwrap_or(0.0);
    let mut best = coeffs;
    let mut polished = false;
    if config.polish {
        if let Some(candidate) = polish(problem, &sparse, &y) {
            let res = (&problem.a * &candidate - &y).norm();
            if res <= radius + feas_tol && l1(&candidate) <= l1(&best) * (1.0 + 1e-9) + 1e-15 {
                best = candidate;
                polished = true;
            }
        }
    }

    let primal_residual = (&problem.a * &best - &y).norm();
    let report = SolverReport {
        iterations,
        primal_residual,
        dual_residual,
        objective: l1(&best),
        converged: admm_converged && primal_residual <= radius + feas_tol,
        polished,
    };
    Ok((best.iter().cloned().collect(), report))
}

// Returns (feasible point, sparse iterate, iterations, dual residual, converged).
fn admm_equality(
    problem: &BasisPursuitProblem,
    y: &DVector<f64>,
    config: &BasisPursuitConfig,
) -> (DVector<f64>, DVector<f64>, usize, f64, bool) {
    let q = problem.a.ncols();
    let rho = config.rho;
    let sqrt_n = (q as f64).sqrt();
    let mut x = DVector::zeros(q);
    let mut z = DVector::<f64>::zeros(q);
    let mut u = DVector::<f64>::zeros(q);
    let mut v = DVector::<f64>::zeros(q);
    let mut dual = f64::INFINITY;
    for k in 1..=config.max_iter {
        v.copy_from(&z);
        v -= &u;
        x = problem.project(&v, y);

        let mut primal_sq = 0.0;
        let mut change_sq = 0.0;
        for i in 0..q {
            let zi = soft_threshold(x[i] + u[i], 1.0 / rho);
            change_sq += (zi - z[i]).powi(2);
            z[i] = zi;
            let r = x[i] - zi;
            u[i] += r;
            primal_sq += r * r;
        }
        let primal = primal_sq.sqrt();
        dual = rho * change_sq.sqrt();
        let eps_pri = sqrt_n * config.tol_abs + config.tol_rel * x.norm().max(z.norm());
        let eps_dual = sqrt_n * config.tol_abs + config.tol_rel * rho * u.norm();
        if primal <= eps_pri && dual <= eps_dual {
            return (x, z, k, dual, true);
        }
    }
    (x, z, config.max_iter, dual, false)
}

// ADMM on  min ‖z‖₁ + 1{‖w − y‖ ≤ r}  s.t.  c = z, A·c = w.
fn admm_ball(
    problem: &BasisPursuitProblem,
    y: &DVector<f64>,
    radius: f64,
    config: &BasisPursuitConfig,
) -> (DVector<f64>, DVector<f64>, usize, f64, bool) {
    let a = &problem.a;
    let (p, q) = a.shape();
    let rho = config.rho;
    let sqrt_n = ((p + q) as f64).sqrt();
    let mut z = DVector::<f64>::zeros(q);
    let mut w = y.clone();
    let mut u1 = DVector::<f64>::zeros(q);
    let mut u2 = DVector::<f64>::zeros(p);
    let mut dual = f64::INFINITY;
    for k in 1..=config.max_iter {
        // (I + AᵀA)⁻¹ rhs by Woodbury.
        let rhs = (&z - &u1) + a.transpose() * (&w - &u2);
        let c = &rhs - &problem.relaxed_pinv * (a * &rhs);
        let ac = a * &c;

        let z_old = z.clone();
        let w_old = w.clone();
        for i in 0..q {
            z[i] = soft_threshold(c[i] + u1[i], 1.0 / rho);
        }
        let target = &ac + &u2;
        let off = &target - y;
        let dist = off.norm();
        w = if dist <= radius { target } else { y + off * (radius / dist) };

        let r1 = &c - &z;
        let r2 = &ac - &w;
        u1 += &r1;
        u2 += &r2;
        let primal = (r1.norm_squared() + r2.norm_squared()).sqrt();
        let dz = &z - &z_old;
        let dw = a.transpose() * (&w - &w_old);
        dual = rho * (dz + dw).norm();
        let eps_pri = sqrt_n * config.tol_abs + config.tol_rel * c.norm().max(z.norm()).max(w.norm());
        let eps_dual = sqrt_n * config.tol_abs + config.tol_rel * rho * (u1.norm() + u2.norm());
        if primal <= eps_pri && dual <= eps_dual {
            return (z.clone(), z, k, dual, true);
        }
    }
    (z.clone(), z, config.max_iter, dual, false)
}

// Least-squares solution on the support of the thresholded iterate `c`, if
// that support is small enough to determine it.
fn polish(problem: &BasisPursuitProblem, c: &DVector<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    let (p, q) = problem.a.shape();
    let peak = c.amax();
    if peak == 0.0 {
        return None;
    }
    let support: Vec<usize> = (0..q).filter(|&i| c[i].abs() > 1e-12 * peak).collect();
    if support.is_empty() || support.len() > p {
        return None;
    }
    let sub = DMatrix::from_fn(p, support.len(), |r, k| problem.a[(r, support[k])]);
    let normal = sub.transpose() * &sub;
    let chol = Cholesky::new(normal)?;
    let w = chol.solve(&(sub.transpose() * y));
    let mut out = DVector::zeros(q);
    for (k, &i) in support.iter().enumerate() {
        out[i] = w[k];
    }
    Some(out)
}

/// Where a node's trace is sparse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SparsityDomain {
    /// A length-`q` basis over the concatenated samples. One operator
    /// serves every node.
    Partial,
    /// A length-`N` basis over the whole frame, restricted to the sampled
    /// slots. The operator depends on the mask and is built per packet.
    #[default]
    Frame,
}

impl fmt::Display for SparsityDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SparsityDomain::Partial => "partial",
            SparsityDomain::Frame => "frame",
        })
    }
}

impl FromStr for SparsityDomain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "partial" => Ok(SparsityDomain::Partial),
            "frame" => Ok(SparsityDomain::Frame),
            other => param_err(format!("unknown sparsity domain {other:?} (expected partial or frame)")),
        }
    }
}

/// Sink-side decoder: the sensing matrix regenerated from the shared seed,
/// the basis and whatever factorizations can be shared across packets.
///
/// The basis length picks the domain: `q` means [`SparsityDomain::Partial`],
/// `N` means [`SparsityDomain::Frame`]. When `q = N` the two coincide.
#[derive(Debug, Clone)]
pub struct SinkDecoder {
    params: PipelineParams,
    basis: TransformBasis,
    sensing: SparseBinaryMatrix,
    domain: SparsityDomain,
    // Partial domain: the shared problem. Frame domain: B and Ψ, dense.
    problem: Option<BasisPursuitProblem>,
    frame_parts: Option<(DMatrix<f64>, DMatrix<f64>)>,
}

impl SinkDecoder {
    pub fn new(params: PipelineParams, sensing_seed: Seed, basis: TransformBasis) -> Result<Self> {
        params.validate()?;
        let domain = if basis.len() == params.q {
            SparsityDomain::Partial
        } else if basis.len() == params.n {
            SparsityDomain::Frame
        } else {
            return param_err(format!("basis length {} matches neither q = {} nor N = {}", basis.len(), params.q, params.n));
        };
        let sensing = generate_sensing_matrix(sensing_seed, params.p, params.q, params.d)?;
        let (problem, frame_parts) = match domain {
            SparsityDomain::Partial => (Some(BasisPursuitProblem::new(sensing.to_dense() * basis.synthesis_matrix())?), None),
            SparsityDomain::Frame => (None, Some((sensing.to_dense(), basis.synthesis_matrix()))),
        };
        Ok(SinkDecoder { params, basis, sensing, domain, problem, frame_parts })
    }

    /// Decoder for `domain`, building the basis of the matching length.
    pub fn with_domain(params: PipelineParams, sensing_seed: Seed, kind: TransformKind, domain: SparsityDomain) -> Result<Self> {
        params.validate()?;
        let len = match domain {
            SparsityDomain::Partial => params.q,
            SparsityDomain::Frame => params.n,
        };
        Self::new(params, sensing_seed, TransformBasis::new(kind, len)?)
    }

    pub fn params(&self) -> &PipelineParams {
        &self.params
    }

    pub fn basis(&self) -> &TransformBasis {
        &self.basis
    }

    pub fn domain(&self) -> SparsityDomain {
        self.domain
    }

    pub fn sensing_matrix(&self) -> &SparseBinaryMatrix {
        &self.sensing
    }

    /// The shared problem of the partial domain.
    pub fn problem(&self) -> Option<&BasisPursuitProblem> {
        self.problem.as_ref()
    }

    /// Recovers the `q` sampled readings carried by `packet`.
    pub fn recover(&self, packet: &NodePacket, config: &BasisPursuitConfig) -> Result<(Vec<f64>, SolverReport)> {
        let PipelineParams { n, p, .. } = self.params;
        if packet.measurements.len() != p || packet.frame_len as usize != n {
            return param_err(format!(
                "packet from node {} has p={}, N={}; expected p={p}, N={n}",
                packet.node_id,
                packet.measurements.len(),
                packet.frame_len
            ));
        }
        let y = packet.measurements.as_slice();
        match (&self.problem, &self.frame_parts) {
            (Some(problem), _) => {
                let (coeffs, report) = problem.solve(y, config)?;
                Ok((self.basis.inverse(&coeffs)?, report))
            }
            (None, Some((b, psi))) => {
                let mask = packet.mask()?;
                if mask.count() != self.params.q {
                    return param_err(format!("packet from node {} samples {} slots, expected {}", packet.node_id, mask.count(), self.params.q));
                }
                let rows = psi.select_rows(mask.ones());
                let problem = BasisPursuitProblem::new(b * &rows)?;
                let (coeffs, report) = problem.solve(y, config)?;
                let x = rows * DVector::from_vec(coeffs);
                Ok((x.iter().copied().collect(), report))
            }
            (None, None) => unreachable!("decoder holds one of the two operators"),
        }
    }
}

/// One-shot form of [`SinkDecoder::recover`]; rebuilds the decoder each call.
pub fn recover_partial_readings(
    packet: &NodePacket,
    sensing_seed: Seed,
    params: &PipelineParams,
    basis: &TransformBasis,
    config: &BasisPursuitConfig,
) -> Result<(Vec<f64>, SolverReport)> {
    SinkDecoder::new(*params, sensing_seed, basis.clone())?.recover(packet, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_operator_returns_measurements() {
        let problem = BasisPursuitProblem::new(DMatrix::identity(5, 5)).unwrap();
        let y = [1.0, -2.0, 0.0, 3.5, 0.25];
        let (c, report) = problem.solve(&y, &BasisPursuitConfig::default()).unwrap();
        assert_eq!(c, y.to_vec());
        assert!(report.converged);
        assert_eq!(report.objective, 6.75);
    }

    #[test]
    fn three_column_example() {
        // Feasible set is (−t, 1−t, t); ℓ1 = |t| + |1−t| + |t| is minimal at t = 0.
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
        let problem = BasisPursuitProblem::new(a).unwrap();
        let (c, report) = problem.solve(&[0.0, 1.0], &BasisPursuitConfig::default()).unwrap();
        assert!(report.converged);
        assert!((c[0]).abs() < 1e-9 && (c[1] - 1.0).abs() < 1e-9 && c[2].abs() < 1e-9, "{c:?}");
        assert!((report.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rank_deficient_operator_is_reported() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert!(matches!(BasisPursuitProblem::new(a), Err(Error::Numerical(_))));
    }

    #[test]
    fn zero_measurements_give_zero() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
        let problem = BasisPursuitProblem::new(a).unwrap();
        let (c, report) = problem.solve(&[0.0, 0.0], &BasisPursuitConfig::default()).unwrap();
        assert!(c.iter().all(|&v| v == 0.0));
        assert!(report.converged);
    }

    #[test]
    fn noise_ball_variant_stays_in_ball() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
        let problem = BasisPursuitProblem::new(a).unwrap();
        let config = BasisPursuitConfig { noise_radius: Some(0.1), ..Default::default() };
        let (c, report) = problem.solve(&[0.0, 1.0], &config).unwrap();
        assert!(report.converged, "{report:?}");
        assert!(report.primal_residual <= 0.1 + 1e-5);
        // The relaxed optimum shrinks the middle coefficient by the radius.
        assert!((c[1] - 0.9).abs() < 1e-4, "{c:?}");
    }

    #[test]
    fn dimension_errors() {
        let problem = BasisPursuitProblem::new(DMatrix::identity(3, 4).remove_row(2)).unwrap();
        assert!(problem.solve(&[1.0], &BasisPursuitConfig::default()).is_err());
        let bad = BasisPursuitConfig { max_iter: 0, ..Default::default() };
        assert!(problem.solve(&[1.0, 2.0], &bad).is_err());
        assert!(BasisPursuitProblem::new(DMatrix::zeros(3, 2)).is_err());
    }

    #[test]
    fn frame_domain_recovers_smooth_trace() {
        use crate::encoder::Encoder;
        let params = PipelineParams::from_ratios(250, 0.3, 0.4, 8, 1).unwrap();
        let basis = TransformBasis::dct(250).unwrap();
        let mut c = vec![0.0; 250];
        c[0] = 40.0;
        c[2] = -3.0;
        c[5] = 1.5;
        let trace = basis.inverse(&c).unwrap();
        let encoder = Encoder::new(params, Seed(3)).unwrap();
        let packet = encoder.encode_frame(trace.as_slice(), 0, 0, Seed(4)).unwrap();
        let decoder = SinkDecoder::new(params, Seed(3), basis).unwrap();
        assert_eq!(decoder.domain(), SparsityDomain::Frame);
        let (x, report) = decoder.recover(&packet, &BasisPursuitConfig::default()).unwrap();
        assert!(report.converged);
        for (k, &t) in packet.mask().unwrap().ones().iter().enumerate() {
            assert!((x[k] - trace[t]).abs() < 1e-8);
        }
    }

    #[test]
    fn domain_follows_basis_length() {
        let params = PipelineParams::from_ratios(100, 0.5, 0.5, 4, 1).unwrap();
        let partial = SinkDecoder::with_domain(params, Seed(1), TransformKind::Dct, SparsityDomain::Partial).unwrap();
        assert_eq!(partial.basis().len(), 50);
        assert!(partial.problem().is_some());
        let frame = SinkDecoder::with_domain(params, Seed(1), TransformKind::Wavelet97, SparsityDomain::Frame).unwrap();
        assert_eq!(frame.basis().len(), 100);
        assert!(SinkDecoder::new(params, Seed(1), TransformBasis::dct(60).unwrap()).is_err());
        assert_eq!("frame".parse::<SparsityDomain>().unwrap(), SparsityDomain::Frame);
        assert!("both".parse::<SparsityDomain>().is_err());
    }
}
