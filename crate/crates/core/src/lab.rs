//! Cross-cutting verification experiments: the parabolic scaling symmetry,
//! embedding chains of the linearized tensor, solver agreement on the
//! smallness horizon, weakly convergent data families, and the modulus of
//! continuity of the flow at t = 0.

use crate::error::{CoreError, Result};
use crate::field::{Field, FieldHistory};
use crate::mild::{picard_solve, select_horizon, HorizonSearch, MildSolution};
use crate::norms::{lp_norm, mixed_norm, mixed_norm_subbox, MixedNormSpec};
use crate::ops::SpectralWorkspace;
use crate::perturb::{
    momentum_residual_field, run_perturbation, reconstruct_total, PerturbationConfig,
    PerturbationRun,
};
use crate::presets::{preset_initial_data, Preset};
use crate::report::{ConvergenceTrace, EstimateReport};
use crate::tolerances::{PICARD_KAPPA_THRESHOLD, PICARD_TOL};

/// The parabolic rescaling of a history: the same samples reinterpreted on
/// a box of edge L / lambda with amplitudes multiplied by lambda^power and
/// times divided by lambda^2. Exact on the grid for any lambda.
pub fn rescale_history(h: &FieldHistory, lambda: f64, power: i32) -> Result<FieldHistory> {
    let grid = h.grid().rescaled(lambda)?;
    let amp = lambda.powi(power);
    let slices = h
        .slices()
        .iter()
        .map(|s| {
            let t = s.time_stamp() / (lambda * lambda);
            Ok(s.scaled(amp).with_grid(grid).with_time(t))
        })
        .collect::<Result<Vec<_>>>()?;
    FieldHistory::new(slices)
}

fn is_power_of_two(lambda: f64) -> bool {
    lambda > 0.0 && lambda.log2().fract().abs() < 1e-12
}

/// Verifies the scaling symmetry v_l(x,t) = l v(lx, l^2 t),
/// q_l = l^2 q(lx, l^2 t):
/// (a) the critical norms |v(0)|_3 and |v|_{5,Q} are invariant;
/// (b) the momentum residual picks up exactly the factor l^3 (max norm).
pub fn scaling_check(
    v: &FieldHistory,
    q: &FieldHistory,
    lambda: f64,
) -> Result<EstimateReport> {
    if !is_power_of_two(lambda) {
        return Err(CoreError::IncommensurateScale(lambda));
    }
    let v_l = rescale_history(v, lambda, 1)?;
    let q_l = rescale_history(q, lambda, 2)?;

    let n3_base = lp_norm(v.slice(0), 3.0)?;
    let n3_scaled = lp_norm(v_l.slice(0), 3.0)?;
    let l5_base = mixed_norm(v, MixedNormSpec::diagonal(5.0)?)?;
    let l5_scaled = mixed_norm(&v_l, MixedNormSpec::diagonal(5.0)?)?;
    let inv3 = (n3_scaled - n3_base).abs() <= 1e-8 * n3_base.max(1e-300);
    let inv5 = (l5_scaled - l5_base).abs() <= 1e-8 * l5_base.max(1e-300);

    // residual comparison at the middle slice
    let (res_pass, res_base, res_scaled) = if v.len() >= 3 {
        let idx = v.len() / 2;
        let ws_base = SpectralWorkspace::new(v.grid());
        let ws_scaled = SpectralWorkspace::new(v_l.grid());
        let r_base = momentum_residual_field(&ws_base, v, q, idx)?;
        let r_scaled = momentum_residual_field(&ws_scaled, &v_l, &q_l, idx)?;
        let m_base = lp_norm(&r_base, f64::INFINITY)?;
        let m_scaled = lp_norm(&r_scaled, f64::INFINITY)?;
        let bound = lambda.powi(3) * m_base;
        (
            m_scaled <= bound * (1.0 + 1e-8) + 1e-12,
            m_base,
            m_scaled,
        )
    } else {
        (true, 0.0, 0.0)
    };

    let pass = inv3 && inv5 && res_pass;
    Ok(
        EstimateReport::new("parabolic_scaling", l5_scaled, l5_base, pass).with_notes(format!(
            "lambda={lambda}; |v(0)|_3: {n3_base:.12e} -> {n3_scaled:.12e}; \
             residual max-norm {res_base:.3e} -> {res_scaled:.3e} (bound x lambda^3)"
        )),
    )
}

/// Norms of v1 (x) v1 in the embedding chain, with the interpolation bound
/// |G|_{2,4} <= |G|_{3/2,inf}^{3/8} |G|_{5/2,5/2}^{5/8}.
pub struct EmbeddingChain {
    pub norm_32_inf: f64,
    pub norm_52_52: f64,
    pub norm_2_4: f64,
    pub norm_2_2: f64,
    pub report: EstimateReport,
}

pub fn embedding_chain_check(ws: &SpectralWorkspace, v1: &FieldHistory) -> Result<EmbeddingChain> {
    let tensor_slices = v1
        .slices()
        .iter()
        .map(|s| {
            let t = s.time_stamp();
            Ok(ws.outer(s, s)?.with_time(t))
        })
        .collect::<Result<Vec<_>>>()?;
    let g = FieldHistory::new(tensor_slices)?;
    let norm_32_inf = mixed_norm(&g, MixedNormSpec::sup_in_time(1.5)?)?;
    let norm_52_52 = mixed_norm(&g, MixedNormSpec::diagonal(2.5)?)?;
    let norm_2_4 = mixed_norm(&g, MixedNormSpec::new(2.0, 4.0)?)?;
    let norm_2_2 = mixed_norm(&g, MixedNormSpec::diagonal(2.0)?)?;
    // theta from 1/4 = (1 - theta) 2/5: theta = 3/8
    let bound = norm_32_inf.powf(0.375) * norm_52_52.powf(0.625);
    let all_finite = [norm_32_inf, norm_52_52, norm_2_4, norm_2_2]
        .iter()
        .all(|n| n.is_finite());
    let pass = all_finite && norm_2_4 <= bound * (1.0 + 1e-10);
    let report = EstimateReport::new("embedding_chain_l4_l2", norm_2_4, bound, pass)
        .with_notes("|G|_{2,4} vs |G|_{3/2,inf}^{3/8} |G|_{5/2,5/2}^{5/8}".to_string());
    Ok(EmbeddingChain {
        norm_32_inf,
        norm_52_52,
        norm_2_4,
        norm_2_2,
        report,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct UniquenessOptions {
    /// Mild-solver / perturbation step count (shared slice grid).
    pub n_steps: usize,
    pub tol: f64,
    pub k_max: usize,
    /// Horizon override: None selects it from the smallness threshold.
    pub horizon: Option<f64>,
}

impl Default for UniquenessOptions {
    fn default() -> Self {
        Self {
            n_steps: 48,
            tol: PICARD_TOL,
            k_max: 30,
            horizon: None,
        }
    }
}

pub struct UniquenessOutcome {
    pub horizon: f64,
    pub distance_55: f64,
    pub distance_3inf: f64,
    pub mild: MildSolution,
    pub perturbation: PerturbationRun,
    pub report: EstimateReport,
}

/// Runs the Picard construction and the energy-correction solver from the
/// same data on the smallness horizon and measures their disagreement.
pub fn uniqueness_experiment(
    ws: &SpectralWorkspace,
    v0: &Field,
    opts: UniquenessOptions,
) -> Result<UniquenessOutcome> {
    fn stage(name: &'static str) -> impl Fn(CoreError) -> CoreError {
        move |e| CoreError::ExperimentIncomplete {
            stage: name.to_string(),
            source: Box::new(e),
        }
    }
    let horizon = match opts.horizon {
        Some(t) => t,
        None => select_horizon(ws, v0, PICARD_KAPPA_THRESHOLD, HorizonSearch::default())
            .map_err(stage("select_horizon"))?,
    };
    let mild = picard_solve(ws, v0, horizon, opts.tol, opts.k_max, opts.n_steps)
        .map_err(stage("mild_solver"))?;
    let dt = horizon / opts.n_steps as f64;
    let cfg = PerturbationConfig::new(horizon, dt).recording_every(1);
    let pert = run_perturbation(ws, v0, &cfg).map_err(stage("perturbation_solver"))?;
    let total = reconstruct_total(&pert).map_err(stage("reconstruct_total"))?;

    let diff = mild.velocity.sub(&total).map_err(stage("compare"))?;
    let distance_55 = mixed_norm(&diff, MixedNormSpec::diagonal(5.0)?)?;
    let distance_3inf = mixed_norm(&diff, MixedNormSpec::sup_in_time(3.0)?)?;
    let pass = distance_55 <= 1e-3 && distance_3inf <= 1e-3;
    let report = EstimateReport::new("solver_agreement", distance_55, 1e-3, pass).with_notes(
        format!("(3,inf) distance {distance_3inf:.3e}; horizon {horizon:.3e}"),
    );
    Ok(UniquenessOutcome {
        horizon,
        distance_55,
        distance_3inf,
        mild,
        perturbation: pert,
        report,
    })
}

/// Index bounds of the centered half-box compact set K.
pub fn central_half_box(ws: &SpectralWorkspace) -> ([usize; 3], [usize; 3]) {
    let n = ws.grid().resolution();
    ([n / 4; 3], [3 * n / 4; 3])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    /// v0 + divergence-free oscillation of wavelength L/m.
    Oscillatory,
    /// v0 + a bump displaced toward the box edge.
    Translated,
}

pub struct WeakConvergenceOutcome {
    /// Local distance |u_m - u| in L3 of K x (0,T) per member.
    pub local_trace: ConvergenceTrace,
    /// |u_m - u|_{L2(Q_T)} per member.
    pub global_trace: ConvergenceTrace,
    /// |v0_m - v0|_3 per member.
    pub data_distances: Vec<f64>,
    pub pass: bool,
}

/// Solves the Cauchy problem for a weakly (not strongly) convergent family
/// of data and traces the local solution distances against the limit.
pub fn weak_convergence_harness(
    ws: &SpectralWorkspace,
    kind: FamilyKind,
    members: &[u32],
    target_l3: f64,
    t_end: f64,
    dt: f64,
    seed: u64,
) -> Result<WeakConvergenceOutcome> {
    if members.len() < 2 {
        return Err(CoreError::TooFewTimes {
            needed: 2,
            got: members.len(),
        });
    }
    let limit_data = preset_initial_data(ws, &Preset::Bump, target_l3, seed)?;
    // distances only need a modest slice cadence; the ledger is unused
    let cfg = PerturbationConfig::new(t_end, dt)
        .recording_every(2)
        .without_ledger();
    let limit_run = run_perturbation(ws, &limit_data, &cfg)?;
    let limit_total = reconstruct_total(&limit_run)?;

    let (lo, hi) = central_half_box(ws);
    let mut locals = Vec::new();
    let mut globals = Vec::new();
    let mut data_distances = Vec::new();
    for &m in members {
        let preset = match kind {
            FamilyKind::Oscillatory => Preset::Oscillatory(m),
            FamilyKind::Translated => Preset::Translated(m),
        };
        let v0m = preset_initial_data(ws, &preset, target_l3, seed)?;
        data_distances.push(lp_norm(&v0m.sub(&limit_data)?, 3.0)?);
        let run = run_perturbation(ws, &v0m, &cfg)?;
        let total = reconstruct_total(&run)?;
        let diff = total.sub(&limit_total)?;
        locals.push(mixed_norm_subbox(
            &diff,
            MixedNormSpec::diagonal(3.0)?,
            lo,
            hi,
        )?);
        globals.push(mixed_norm(&diff, MixedNormSpec::diagonal(2.0)?)?);
    }

    // the family must stay away from the limit in the data norm
    let first = data_distances[0];
    let last = *data_distances.last().expect("nonempty");
    if last < 0.5 * first {
        return Err(CoreError::MisconfiguredFamily(format!(
            "initial-data distance collapsed: {first:.3e} -> {last:.3e}"
        )));
    }
    let strictly_decreasing = locals.windows(2).all(|w| w[1] < w[0]);
    let params: Vec<f64> = members.iter().map(|&m| f64::from(m)).collect();
    let local_trace = ConvergenceTrace::new(
        "member",
        params.clone(),
        "local_l3_distance",
        locals,
    )
    .with_loglog_fit();
    let global_trace = ConvergenceTrace::new("member", params, "global_l2_distance", globals);
    Ok(WeakConvergenceOutcome {
        local_trace,
        global_trace,
        data_distances,
        pass: strictly_decreasing,
    })
}

/// Trace of |v(t) - v0|_3 for the mild solution as t decreases to 0.
///
/// Each requested time gets its own short Picard solve on [0, t], so the
/// trace reaches arbitrarily small horizons at fixed cost and memory.
pub fn modulus_of_continuity(
    ws: &SpectralWorkspace,
    v0: &Field,
    t_list: &[f64],
    n_steps: usize,
) -> Result<ConvergenceTrace> {
    if t_list.is_empty() || t_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CoreError::TooFewTimes {
            needed: 2,
            got: t_list.len(),
        });
    }
    let zero = lp_norm(v0, 3.0)?;
    if zero == 0.0 {
        return Ok(ConvergenceTrace::new(
            "t",
            t_list.to_vec(),
            "l3_distance_to_data",
            vec![0.0; t_list.len()],
        ));
    }
    let mut values = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let sol = picard_solve(ws, v0, t, PICARD_TOL, 30, n_steps)?;
        let slice = sol.velocity.slices().last().expect("nonempty");
        values.push(lp_norm(&slice.sub(v0)?, 3.0)?);
    }
    Ok(ConvergenceTrace::new(
        "t",
        t_list.to_vec(),
        "l3_distance_to_data",
        values,
    ))
}
