use std::time::Instant;

use log::debug;
use nalgebra::DVector;

use crate::linsys::KktFactor;
use crate::polish::polish;
use crate::program::Stacked;
use crate::residual::{stacked_residuals, Residuals};
use crate::scaling::{equilibrate, Scaling};
use crate::{inf_norm, ConicProgram, Real, Result};

#[derive(Clone, Debug)]
pub struct Settings<T> {
    pub tol_primal: T,
    pub tol_dual: T,
    pub tol_gap: T,
    pub max_iter: usize,
    pub scaling: bool,
    pub scaling_iters: usize,
    pub rho: T,
    pub sigma: T,
    /// Over-relaxation parameter in (0, 2).
    pub alpha: T,
    pub adaptive_rho: bool,
    pub adaptive_rho_interval: usize,
    /// Iterations between residual and certificate checks.
    pub check_interval: usize,
    pub eps_infeasible: T,
    /// Active-set refinement for programs without second-order cones.
    pub polish: bool,
    /// Skip polishing when the reduced KKT system would exceed this size.
    pub polish_max_dim: usize,
    /// Iterations between polishing attempts before convergence; zero
    /// polishes only at the end.
    pub polish_interval: usize,
}

impl<T: Real> Default for Settings<T> {
    fn default() -> Self {
        Settings {
            tol_primal: T::lit(1e-7),
            tol_dual: T::lit(1e-7),
            tol_gap: T::lit(1e-7),
            max_iter: 200_000,
            scaling: true,
            scaling_iters: 15,
            rho: T::lit(0.1),
            sigma: T::lit(1e-6),
            alpha: T::lit(1.6),
            adaptive_rho: true,
            adaptive_rho_interval: 50,
            check_interval: 10,
            eps_infeasible: T::lit(1e-7),
            polish: true,
            polish_max_dim: 1500,
            polish_interval: 500,
        }
    }
}

impl<T: Real> Settings<T> {
    /// Same settings with all three termination tolerances set to `tol`.
    pub fn with_tolerance(mut self, tol: T) -> Self {
        self.tol_primal = tol;
        self.tol_dual = tol;
        self.tol_gap = tol;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::IterLimit => "iter_limit",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult<T: Real> {
    pub x: DVector<T>,
    /// Dual vector: equality rows, then cone blocks.
    pub y: DVector<T>,
    pub status: SolveStatus,
    pub objective: T,
    pub primal_residual: T,
    pub dual_residual: T,
    pub gap: T,
    pub iterations: usize,
    pub polished: bool,
    /// Final step size, reusable through [`WarmStart`].
    pub rho: T,
    pub solve_time: std::time::Duration,
}

/// Starting point for a solve of a program with the same shape, typically
/// the previous solution in a sequence of closely related programs.
#[derive(Clone, Debug)]
pub struct WarmStart<T: Real> {
    pub x: DVector<T>,
    pub y: DVector<T>,
    pub rho: Option<T>,
}

impl<T: Real> WarmStart<T> {
    pub fn from_result(r: &SolveResult<T>) -> Self {
        WarmStart { x: r.x.clone(), y: r.y.clone(), rho: Some(r.rho) }
    }
}

impl<T: Real> SolveResult<T> {
    pub fn residuals(&self) -> Residuals<T> {
        Residuals { primal: self.primal_residual, dual: self.dual_residual, gap: self.gap }
    }
}

struct Iterate<T: Real> {
    x: DVector<T>,
    z: DVector<T>,
    y: DVector<T>,
}

fn project_c<T: Real>(st: &Stacked<T>, v: &DVector<T>) -> DVector<T> {
    // C = b − K, Π_C(v) = b − Π_K(b − v)
    let mut s = &st.b - v;
    st.project(&mut s);
    &st.b - s
}

fn rho_vector<T: Real>(st: &Stacked<T>, rho: T) -> DVector<T> {
    let mut r = DVector::from_element(st.b.len(), rho);
    for blk in st.blocks.iter().filter(|b| b.kind == crate::cone::RowKind::Zero) {
        for i in blk.start..blk.start + blk.len {
            r[i] = rho * T::lit(1e3);
        }
    }
    r
}

/// Solves the program with the operator-splitting iteration.
///
/// Iteration limits, infeasibility and unboundedness are reported through
/// [`SolveStatus`]; only a failed factorization is an `Err`.
pub fn solve<T: Real>(prog: &ConicProgram<T>, settings: &Settings<T>) -> Result<SolveResult<T>> {
    solve_inner(prog, settings, None)
}

/// Like [`solve`], starting from `warm`. A start whose dimensions do not
/// match the program is ignored.
pub fn solve_warm<T: Real>(prog: &ConicProgram<T>, settings: &Settings<T>, warm: &WarmStart<T>) -> Result<SolveResult<T>> {
    solve_inner(prog, settings, Some(warm))
}

fn solve_inner<T: Real>(prog: &ConicProgram<T>, settings: &Settings<T>, warm: Option<&WarmStart<T>>) -> Result<SolveResult<T>> {
    let start = Instant::now();
    prog.validate()?;
    let orig = prog.stacked();
    let mut st = orig.clone();
    let n = st.a.ncols();
    let m = st.a.nrows();
    let sc = if settings.scaling {
        equilibrate(&mut st, settings.scaling_iters)
    } else {
        Scaling::identity(n, m)
    };

    let warm = warm.filter(|w| w.x.len() == n && w.y.len() == m);
    let mut rho_scalar = warm.and_then(|w| w.rho).filter(|r| *r > T::zero() && r.is_finite()).unwrap_or(settings.rho);
    let mut rho = rho_vector(&st, rho_scalar);
    let sigma = settings.sigma;
    let alpha = settings.alpha;
    let mut kkt = KktFactor::new(&st, sigma, &rho)?;

    let (x0, y0) = match warm {
        Some(w) => (sc.scale_x(&w.x), sc.scale_y(&w.y)),
        None => (DVector::zeros(n), DVector::zeros(m)),
    };
    let mut it = Iterate { z: project_c(&st, &(&st.a * &x0)), x: x0, y: y0 };
    let mut prev_x = it.x.clone();
    let mut prev_y = it.y.clone();

    let mut status = SolveStatus::IterLimit;
    let mut iterations = settings.max_iter;
    let check = settings.check_interval.max(1);
    let can_polish = settings.polish && !st.has_soc();
    let mut early = None;

    for k in 1..=settings.max_iter {
        prev_x.copy_from(&it.x);
        prev_y.copy_from(&it.y);

        let r1 = it.x.scale(sigma) - &st.q;
        let r2 = &it.z - it.y.component_div(&rho);
        let (xt, nu) = kkt.solve(&st.a, &rho, &r1, &r2);
        let zt = &it.z + (&nu - &it.y).component_div(&rho);
        it.x = xt.scale(alpha) + it.x.scale(T::one() - alpha);
        let zr = zt.scale(alpha) + it.z.scale(T::one() - alpha);
        let znew = project_c(&st, &(&zr + it.y.component_div(&rho)));
        it.y += rho.component_mul(&(&zr - &znew));
        it.z = znew;

        if k % check == 0 || k == settings.max_iter {
            let x = sc.unscale_x(&it.x);
            let y = sc.unscale_y(&it.y);
            let res = stacked_residuals(&orig, &x, &y);
            if meets(&res, settings) {
                status = SolveStatus::Optimal;
                iterations = k;
                break;
            }
            if primal_infeasible(&orig, &sc, &it.y, &prev_y, settings.eps_infeasible) {
                status = SolveStatus::Infeasible;
                iterations = k;
                break;
            }
            if dual_infeasible(&orig, &sc, &it.x, &prev_x, settings.eps_infeasible) {
                status = SolveStatus::Unbounded;
                iterations = k;
                break;
            }
        }

        if can_polish && settings.polish_interval > 0 && k % settings.polish_interval == 0 {
            if let Some(p) = try_polish(&orig, &st, &sc, &it, settings) {
                if meets(&p.2, settings) {
                    early = Some(p);
                    status = SolveStatus::Optimal;
                    iterations = k;
                    break;
                }
            }
        }

        if settings.adaptive_rho && k % settings.adaptive_rho_interval.max(1) == 0 {
            let new_rho = propose_rho(&st, &it, rho_scalar);
            if new_rho > rho_scalar * T::lit(5.0) || new_rho < rho_scalar / T::lit(5.0) {
                rho_scalar = new_rho;
                rho = rho_vector(&st, rho_scalar);
                kkt = KktFactor::new(&st, sigma, &rho)?;
            }
        }
    }

    let mut x = sc.unscale_x(&it.x);
    let mut y = sc.unscale_y(&it.y);
    let mut res = stacked_residuals(&orig, &x, &y);
    let mut polished = false;
    if early.is_none() && can_polish && matches!(status, SolveStatus::Optimal | SolveStatus::IterLimit) {
        early = try_polish(&orig, &st, &sc, &it, settings).filter(|p| {
            p.2.max() <= res.max() && (status == SolveStatus::Optimal || meets(&p.2, settings))
        });
        if early.is_some() {
            status = SolveStatus::Optimal;
        }
    }
    if let Some((xp, yp, pres)) = early {
        x = xp;
        y = yp;
        res = pres;
        polished = true;
    }
    debug!(
        "conic solve: status={} iters={} rho={} res=({:.2e},{:.2e},{:.2e}) polished={}",
        status.as_str(),
        iterations,
        rho_scalar,
        res.primal,
        res.dual,
        res.gap,
        polished
    );
    let objective = prog.objective(&x);
    Ok(SolveResult {
        x,
        y,
        status,
        objective,
        primal_residual: res.primal,
        dual_residual: res.dual,
        gap: res.gap,
        iterations,
        polished,
        rho: rho_scalar,
        solve_time: start.elapsed(),
    })
}

fn meets<T: Real>(res: &Residuals<T>, settings: &Settings<T>) -> bool {
    res.primal <= settings.tol_primal && res.dual <= settings.tol_dual && res.gap <= settings.tol_gap
}

/// Polished pair in original units with its residuals.
fn try_polish<T: Real>(
    orig: &Stacked<T>,
    st: &Stacked<T>,
    sc: &Scaling<T>,
    it: &Iterate<T>,
    settings: &Settings<T>,
) -> Option<(DVector<T>, DVector<T>, Residuals<T>)> {
    let (xp, yp) = polish(st, &it.z, &it.y, settings.polish_max_dim)?;
    let x = sc.unscale_x(&xp);
    let y = sc.unscale_y(&yp);
    let res = stacked_residuals(orig, &x, &y);
    Some((x, y, res))
}

fn propose_rho<T: Real>(st: &Stacked<T>, it: &Iterate<T>, rho: T) -> T {
    let tiny = T::lit(1e-10);
    let ax = &st.a * &it.x;
    let px = st.p.mul(&it.x);
    let aty = st.a.tr_mul(&it.y);
    let rp = inf_norm((&ax - &it.z).as_slice()) / inf_norm(ax.as_slice()).max(inf_norm(it.z.as_slice())).max(tiny);
    let rd = inf_norm((&px + &st.q + &aty).as_slice())
        / inf_norm(px.as_slice())
            .max(inf_norm(aty.as_slice()))
            .max(inf_norm(st.q.as_slice()))
            .max(tiny);
    let ratio = (rp / rd.max(tiny)).sqrt();
    (rho * ratio).max(T::lit(1e-6)).min(T::lit(1e6))
}

fn primal_infeasible<T: Real>(orig: &Stacked<T>, sc: &Scaling<T>, y: &DVector<T>, yprev: &DVector<T>, eps: T) -> bool {
    if y.is_empty() {
        return false;
    }
    let dy = sc.unscale_y(&(y - yprev));
    let nrm = inf_norm(dy.as_slice());
    if nrm <= T::lit(1e-14) * (T::one() + inf_norm(sc.unscale_y(y).as_slice())) {
        return false;
    }
    let aty = orig.a.tr_mul(&dy);
    if inf_norm(aty.as_slice()) > eps * nrm {
        return false;
    }
    if orig.b.dot(&dy) >= -eps * nrm {
        return false;
    }
    let mut proj = dy.clone();
    orig.project_dual(&mut proj);
    inf_norm((&dy - &proj).as_slice()) <= eps * nrm
}

fn dual_infeasible<T: Real>(orig: &Stacked<T>, sc: &Scaling<T>, x: &DVector<T>, xprev: &DVector<T>, eps: T) -> bool {
    let dx = sc.unscale_x(&(x - xprev));
    let nrm = inf_norm(dx.as_slice());
    if nrm <= T::lit(1e-14) * (T::one() + inf_norm(sc.unscale_x(x).as_slice())) {
        return false;
    }
    if inf_norm(orig.p.mul(&dx).as_slice()) > eps * nrm {
        return false;
    }
    if orig.q.dot(&dx) >= -eps * nrm {
        return false;
    }
    // the recession direction must keep b − A x inside the cone: −A dx ∈ K
    let adx = -(&orig.a * &dx);
    let mut proj = adx.clone();
    orig.project(&mut proj);
    inf_norm((&adx - &proj).as_slice()) <= eps * nrm
}
