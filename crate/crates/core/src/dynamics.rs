//! Time propagation, norms, observables and decay-rate fits.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd;

use crate::error::{dim_err, Error, Result};
use crate::linalg::{self, c64, cr, CMat, ONE, ZERO};
use crate::operator::{Layout, SuperOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Eigendecomposition of the generator, with a Taylor fallback when the
    /// eigenbasis is too ill-conditioned.
    Auto,
    Eigen,
    Taylor,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CMat>,
    pub method: &'static str,
}

/// Eigenbasis of a generator prepared for repeated propagation.
pub struct EigenPropagator {
    values: Vec<c64>,
    vecs: CMat,
    lu: faer::linalg::solvers::PartialPivLu<c64>,
}

/// Amplification threshold above which the eigenbasis route is abandoned.
const MAX_AMPLIFICATION: f64 = 1e7;

impl EigenPropagator {
    pub fn new(gen: &CMat) -> Result<Self> {
        let n = gen.nrows();
        let par = faer::get_global_parallelism();
        let mut s = faer::diag::Diag::<c64>::zeros(n);
        let mut ur = linalg::zeros(n, n);
        let scratch = evd::evd_scratch::<c64>(
            n,
            evd::ComputeEigenvectors::No,
            evd::ComputeEigenvectors::Yes,
            par,
            Default::default(),
        );
        evd::evd_cplx(
            gen.as_ref(),
            s.as_mut(),
            None,
            Some(ur.as_mut()),
            par,
            MemStack::new(&mut MemBuffer::new(scratch)),
            Default::default(),
        )
        .map_err(|e| Error::Numerical(format!("eigensolver: {e:?}")))?;
        Ok(Self::from_parts((0..n).map(|i| s[i]).collect(), ur))
    }

    pub fn from_parts(values: Vec<c64>, vecs: CMat) -> Self {
        let lu = vecs.partial_piv_lu();
        Self { values, vecs, lu }
    }

    /// Expansion coefficients of `v0`, or `None` when cancellation in the
    /// eigenbasis would lose too many digits.
    pub fn coefficients(&self, v0: &CMat) -> Option<CMat> {
        use faer::linalg::solvers::Solve;
        let c = self.lu.solve(v0);
        let back = &self.vecs * &c;
        let nv = v0.norm_l2().max(f64::MIN_POSITIVE);
        if (&back - v0).norm_l2() > 1e-10 * nv {
            return None;
        }
        for col in 0..c.ncols() {
            let mut amp = 0.0;
            for k in 0..c.nrows() {
                amp += c[(k, col)].norm() * self.vecs.col(k).norm_l2();
            }
            let nc = v0.col(col).norm_l2().max(f64::MIN_POSITIVE);
            if !amp.is_finite() || amp / nc > MAX_AMPLIFICATION {
                return None;
            }
        }
        Some(c)
    }

    pub fn evolve(&self, c: &CMat, t: f64) -> CMat {
        let scaled = CMat::from_fn(c.nrows(), c.ncols(), |k, j| c[(k, j)] * (self.values[k] * t).exp());
        &self.vecs * &scaled
    }
}

/// `exp(t A) v` by Taylor series on substeps with `‖hA‖₁ ≤ 1`.
pub fn expmv(a: &CMat, v: &CMat, t: f64) -> CMat {
    if t == 0.0 {
        return v.clone();
    }
    let norm = one_norm(a) * t.abs();
    let steps = norm.ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let mut x = v.clone();
    for _ in 0..steps {
        let mut term = x.clone();
        let mut acc = x.clone();
        for k in 1..60 {
            term = linalg::scale(&(a * &term), cr(h / k as f64));
            acc += &term;
            if term.norm_l2() <= 1e-17 * acc.norm_l2() {
                break;
            }
        }
        x = acc;
    }
    x
}

pub fn one_norm(a: &CMat) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        let mut s = 0.0;
        for i in 0..a.nrows() {
            s += a[(i, j)].norm();
        }
        m = m.max(s);
    }
    m
}

/// Matrix exponential, Padé(13) with scaling and squaring.
pub fn expm(a: &CMat) -> CMat {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let n = a.nrows();
    let theta13 = 5.371920351148152;
    let norm = one_norm(a);
    let s = if norm > theta13 { (norm / theta13).log2().ceil() as i32 } else { 0 };
    let a = linalg::scale(a, cr(0.5f64.powi(s)));
    let id = linalg::eye(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let sc = |m: &CMat, x: f64| linalg::scale(m, cr(x));
    let u_inner = &a6 * (sc(&a6, B[13]) + sc(&a4, B[11]) + sc(&a2, B[9]));
    let u = &a * (u_inner + sc(&a6, B[7]) + sc(&a4, B[5]) + sc(&a2, B[3]) + sc(&id, B[1]));
    let v_inner = &a6 * (sc(&a6, B[12]) + sc(&a4, B[10]) + sc(&a2, B[8]));
    let v = v_inner + sc(&a6, B[6]) + sc(&a4, B[4]) + sc(&a2, B[2]) + sc(&id, B[0]);
    let mut r = linalg::solve(&(&v - &u), &(&v + &u));
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Propagates a vectorized state (or several, one per column); works on
/// any layout.
pub fn propagate_vec(gen: &CMat, v0: &CMat, times: &[f64], method: Method) -> Result<(Vec<CMat>, &'static str)> {
    if gen.nrows() != gen.ncols() || gen.nrows() != v0.nrows() {
        return dim_err("propagate: generator and state sizes differ");
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Invalid("times must be non-decreasing".into()));
    }
    if method != Method::Taylor {
        let ep = EigenPropagator::new(gen)?;
        if let Some(c) = ep.coefficients(v0) {
            return Ok((times.iter().map(|&t| ep.evolve(&c, t)).collect(), "eigen"));
        }
        if method == Method::Eigen {
            return Err(Error::Numerical("eigenbasis too ill-conditioned for this state".into()));
        }
        eprintln!("warning: ill-conditioned eigenbasis, falling back to Taylor propagation");
    }
    let mut out = Vec::with_capacity(times.len());
    let mut t_prev = 0.0;
    let mut x = v0.clone();
    for &t in times {
        x = expmv(gen, &x, t - t_prev);
        t_prev = t;
        out.push(x.clone());
    }
    Ok((out, "taylor"))
}

pub fn propagate(gen: &SuperOperator, rho0: &CMat, times: &[f64], method: Method) -> Result<Trajectory> {
    if !gen.is_square() {
        return dim_err("propagate needs a square generator");
    }
    let v0 = gen.domain.vectorize(rho0)?;
    let (vs, tag) = propagate_vec(&gen.mat, &v0, times, method)?;
    let states = vs.iter().map(|v| gen.domain.devectorize(v)).collect::<Result<Vec<_>>>()?;
    Ok(Trajectory { times: times.to_vec(), states, method: tag })
}

pub fn trace_norm(x: &CMat) -> Result<f64> {
    Ok(linalg::singular_values(x)?.iter().sum())
}

pub fn hs_norm(x: &CMat) -> f64 {
    x.norm_l2()
}

/// Norm induced by the Hilbert–Schmidt norm: the largest singular value.
pub fn sop_norm(s: &SuperOperator) -> Result<f64> {
    linalg::spectral_norm(&s.mat)
}

pub fn expectation(obs: &CMat, traj: &Trajectory) -> Vec<f64> {
    traj.states.iter().map(|rho| linalg::trace((obs * rho).as_ref()).re).collect()
}

/// `tr(obs ρ)` for compact-layout states.
pub fn expectation_in(obs: &CMat, rho: &CMat, layout: &Layout) -> c64 {
    let mut acc = ZERO;
    for k in 0..layout.vec_dim() {
        let (i, j) = layout.position(k);
        acc += obs[(j, i)] * rho[(i, j)];
    }
    acc
}

#[derive(Clone, Debug)]
pub struct DecayFit {
    pub rate: f64,
    pub points_used: usize,
    pub warnings: Vec<String>,
}

/// Least-squares decay rate of `log(error)` over `window` (default: the
/// trailing half of the samples). Oscillating signals are fitted through
/// their local maxima.
pub fn decay_fit(errors: &[f64], times: &[f64], window: Option<(f64, f64)>) -> Result<DecayFit> {
    if errors.len() != times.len() {
        return dim_err("decay_fit: errors and times differ in length");
    }
    let (lo, hi) = window.unwrap_or_else(|| {
        let n = times.len();
        (times[n / 2], times[n - 1])
    });
    let mut warnings = vec![];
    let max_err = errors.iter().cloned().fold(0.0f64, f64::max);
    let floor = 1e-13 * max_err;
    let mut idx: Vec<usize> = (0..times.len()).filter(|&i| times[i] >= lo && times[i] <= hi).collect();
    let before = idx.len();
    idx.retain(|&i| errors[i] > floor);
    if idx.len() < before {
        warnings.push(format!("{} non-positive or sub-floor samples dropped from the window", before - idx.len()));
    }
    if idx.len() < 2 {
        return Err(Error::Invalid("decay_fit: fewer than two usable samples".into()));
    }
    let peaks: Vec<usize> = idx
        .windows(3)
        .filter(|w| errors[w[1]] >= errors[w[0]] && errors[w[1]] >= errors[w[2]])
        .map(|w| w[1])
        .collect();
    let pts = if peaks.len() >= 4 { peaks } else { idx };
    let n = pts.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &i in &pts {
        let x = times[i];
        let y = errors[i].ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let denom = n * sxx - sx * sx;
    if denom.abs() < f64::MIN_POSITIVE {
        return Err(Error::Invalid("decay_fit: degenerate time window".into()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    Ok(DecayFit { rate: -slope, points_used: pts.len(), warnings })
}

/// 200-point grid: geometric to resolve the transient, then linear.
pub fn default_grid(t_max: f64) -> Vec<f64> {
    let mut t = vec![0.0];
    let geo = 50;
    let lin = 149;
    let t_geo = 0.05 * t_max;
    for k in 0..geo {
        t.push(t_geo * 1e-3f64.powf(1.0 - k as f64 / (geo - 1) as f64));
    }
    for k in 1..=lin {
        t.push(t_geo + (t_max - t_geo) * k as f64 / lin as f64);
    }
    t
}

pub fn linear_grid(t_max: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| t_max * k as f64 / (n - 1).max(1) as f64).collect()
}

/// Trace of the full-space state; sanity helper for trajectories.
pub fn trace_of(rho: &CMat) -> c64 {
    linalg::trace(rho.as_ref())
}

pub fn is_trace_one(rho: &CMat, tol: f64) -> bool {
    (trace_of(rho) - ONE).norm() <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{liouvillian, pauli, HilbertSpace, LindbladModel};

    fn damping(g: f64) -> SuperOperator {
        let sp = HilbertSpace::new(2).unwrap();
        let m = LindbladModel::new(sp, linalg::zeros(2, 2), vec![linalg::scale(&pauli::plus(), cr(g.sqrt()))]).unwrap();
        liouvillian(&m).unwrap()
    }

    #[test]
    fn expm_matches_closed_form_rotation() {
        // exp(t [[0, -1], [1, 0]]) is a rotation by t.
        let a = linalg::from_real(&[&[0.0, -3.0], &[3.0, 0.0]]);
        let e = expm(&a);
        assert!((e[(0, 0)].re - 3f64.cos()).abs() < 1e-13);
        assert!((e[(1, 0)].re - 3f64.sin()).abs() < 1e-13);
    }

    #[test]
    fn damping_population_decays_exponentially() {
        let g = 0.8;
        let lv = damping(g);
        let rho0 = crate::operator::ketbra(2, 1, 1);
        let times = [0.0, 0.5, 1.0, 3.0];
        for method in [Method::Eigen, Method::Taylor] {
            let tr = propagate(&lv, &rho0, &times, method).unwrap();
            for (t, rho) in times.iter().zip(&tr.states) {
                assert!((rho[(1, 1)].re - (-g * t).exp()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn decay_fit_on_synthetic_oscillation() {
        let times = linear_grid(30.0, 400);
        let errs: Vec<f64> = times.iter().map(|t| (-0.72 * t).exp() * (6.0 * t).cos().abs()).collect();
        let fit = decay_fit(&errs, &times, Some((5.0, 30.0))).unwrap();
        assert!((fit.rate - 0.72).abs() < 0.02, "rate {}", fit.rate);
    }

    #[test]
    fn trace_norm_of_sigma_z() {
        assert!((trace_norm(&pauli::z()).unwrap() - 2.0).abs() < 1e-14);
    }
}
