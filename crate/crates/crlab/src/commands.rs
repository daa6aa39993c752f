use crate::config::RunConfig;
use crate::report::{ReportDocument, SpectrumAttachment};
use crate::svg::field_svg;
use crlab_core::bundle_autos::{injectivity_bound, seam_defect, sigma_inverse, sigma_map, InfinitesimalAuto};
use crlab_core::deformation_ops::{bump, holomorphic_section_dim, lie_derivative_check, mu_constant, DeformationComplex, SpectrumCertificate};
use crlab_core::line_bundle::{
    area_form_pullback, contact_form, contact_form_real, ddbar_fd, exterior_derivative_fd, group_covariance_defect, model_gamma, model_group_action, model_log_metric,
    model_norm, reduced_tw_curvature, verify_curvature_identity, Derivative,
};
use crlab_core::mobius_fuchsian::{fuchsian_group, group_relation_residual, random_su11, relation_condition};
use crlab_core::surface_mesh::{hyperbolic_area, rho, SectionField, SurfaceMesh};
use crlab_core::surface_pde::{maximum_principle_bounds, yamabe_newton, YamabeProblem};
use crlab_core::{Complex64 as C, CrError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::time::Instant;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments; exit code 2.
    Usage(String),
    /// A computation could not run at all; exit code 1.
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(s) => write!(f, "usage error: {s}"),
            CliError::Runtime(s) => write!(f, "{s}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

fn ctx(what: &str) -> impl Fn(CrError) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{what}: {e}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Mesh,
    KernelDim,
    VerifyModel,
    Yamabe,
    Split,
    Sigma,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Mesh => "mesh",
            Command::KernelDim => "kernel-dim",
            Command::VerifyModel => "verify-model",
            Command::Yamabe => "yamabe",
            Command::Split => "split",
            Command::Sigma => "sigma",
            Command::Report => "report",
        }
    }

    pub fn default_refinement(self) -> usize {
        match self {
            Command::Mesh | Command::KernelDim | Command::Yamabe => 3,
            _ => 2,
        }
    }
}

/// Knobs that only some subcommands read.
#[derive(Debug, Clone)]
pub struct Extras {
    pub amplitude: f64,
    pub perturb: f64,
    pub cases: usize,
    pub sigma_cases: usize,
    /// The report subcommand keeps the given refinement for every stage instead of each stage's default.
    pub fixed_refinement: bool,
}

impl Default for Extras {
    fn default() -> Self {
        Self { amplitude: 0.3, perturb: 0.0, cases: 20, sigma_cases: 100, fixed_refinement: false }
    }
}

fn build_mesh(cfg: &RunConfig) -> Result<SurfaceMesh, CliError> {
    SurfaceMesh::regular(cfg.genus, cfg.refinement).map_err(ctx("mesh construction"))
}

fn vertex_plot(mesh: &SurfaceMesh, values: &[f64], name: &str, title: &str) -> (String, String) {
    (format!("{name}.svg"), field_svg(mesh, values, title))
}

pub fn run(cmd: Command, cfg: &RunConfig, extras: &Extras) -> Result<ReportDocument, CliError> {
    match cmd {
        Command::Mesh => cmd_mesh(cfg),
        Command::KernelDim => cmd_kernel_dim(cfg),
        Command::VerifyModel => cmd_verify_model(cfg, extras.perturb),
        Command::Yamabe => cmd_yamabe(cfg, extras.amplitude),
        Command::Split => cmd_split(cfg, extras.cases),
        Command::Sigma => cmd_sigma(cfg, extras.sigma_cases),
        Command::Report => cmd_report(cfg, extras),
    }
}

pub fn cmd_mesh(cfg: &RunConfig) -> Result<ReportDocument, CliError> {
    let t = Instant::now();
    let mut rep = ReportDocument::new("mesh", cfg);
    let target = 4.0 * PI * (cfg.genus as f64 - 1.0);
    let mesh = build_mesh(cfg)?;
    let area = hyperbolic_area(&mesh);
    rep.near("area", "Gauss-Bonnet 4 pi (g-1)", area, target, cfg.tol("area", 0.01) * target);
    rep.near("euler_characteristic", "2 - 2g", mesh.euler_characteristic() as f64, 2.0 - 2.0 * cfg.genus as f64, 0.0);
    rep.flag("orientation", "positive triangle orientation", mesh.orientation_ok());
    let mut errors = Vec::new();
    for r in 0..=cfg.refinement {
        let m = SurfaceMesh::regular(cfg.genus, r).map_err(ctx("mesh construction"))?;
        let err = (hyperbolic_area(&m) - target).abs() / target;
        rep.notes.push(format!("refinement {r}: {} triangles, relative area error {err:.6e}", m.triangles.len()));
        errors.push(err);
    }
    if errors.len() > 1 {
        let monotone = errors.windows(2).all(|w| w[1] < w[0]);
        rep.flag("area_error_decreasing", "convergence table", monotone);
    }
    rep.artifacts.push(("surface_mesh.json".into(), serde_json::to_string(&mesh.to_json()).expect("mesh serializes") + "\n"));
    if cfg.plots {
        let rho_v: Vec<f64> = mesh.representatives().iter().map(|&v| rho(mesh.vertices[v]).ln()).collect();
        rep.artifacts.push(vertex_plot(&mesh, &rho_v, "mesh_log_density", "log area density"));
    }
    rep.timing.push(("total".into(), t.elapsed().as_secs_f64()));
    Ok(rep)
}

fn attach(rep: &mut ReportDocument, name: &str, oracle: &str, expected: usize, r: crlab_core::Result<SpectrumCertificate>) -> Result<Option<usize>, CliError> {
    match r {
        Ok(c) => {
            rep.near(&format!("dim_{name}"), oracle, c.count_below as f64, expected as f64, 0.0);
            let n = c.count_below;
            rep.spectra.push(SpectrumAttachment { name: name.into(), certificate: Some(c), inconclusive_spectrum: None });
            Ok(Some(n))
        }
        Err(CrError::Inconclusive { gap_ratio, required, spectrum }) => {
            rep.notes.push(format!("{name}: inconclusive, largest gap ratio {gap_ratio:.3} below {required}"));
            rep.spectra.push(SpectrumAttachment { name: name.into(), certificate: None, inconclusive_spectrum: Some(spectrum) });
            Ok(None)
        }
        Err(e) => Err(CliError::Runtime(format!("{name} spectrum: {e}"))),
    }
}

pub fn cmd_kernel_dim(cfg: &RunConfig) -> Result<ReportDocument, CliError> {
    let t = Instant::now();
    let mut rep = ReportDocument::new("kernel-dim", cfg);
    let g = cfg.genus;
    let e = cfg.exponent();
    let mu = -e / 4.0;
    let mesh = build_mesh(cfg)?;
    match mu_constant(&mesh, &|z| model_gamma(z, e)) {
        Ok((fit, spread)) => {
            rep.near("connection_mu", "closed form -e/4", fit, mu, cfg.tol("connection_mu", 1e-2) * mu.abs());
            rep.below("connection_mu_spread", "mu is constant over the fundamental domain", spread, cfg.tol("connection_mu_spread", 1e-3));
        }
        Err(err) => rep.notes.push(format!("mu fit unavailable at refinement {}: {err}", cfg.refinement)),
    }
    let cx = DeformationComplex::new(&mesh, cfg.degree, mu).map_err(ctx("deformation complex"))?;
    rep.notes.push(format!("degree {} Lagrange space with {} dofs per component", cfg.degree, cx.n_dofs()));
    rep.timing.push(("assembly".into(), t.elapsed().as_secs_f64()));
    let ps = attach(&mut rep, "p_star", "8g - 6", 8 * g - 6, cx.p_star_kernel(cfg.seed))?;
    rep.timing.push(("p_star".into(), t.elapsed().as_secs_f64()));
    let q1 = attach(&mut rep, "q1", "2g", 2 * g, holomorphic_section_dim(&mesh, 1, cfg.degree, cfg.seed))?;
    let q2 = attach(&mut rep, "q2", "6g - 6", 6 * g - 6, holomorphic_section_dim(&mesh, 2, cfg.degree, cfg.seed))?;
    rep.timing.push(("sections".into(), t.elapsed().as_secs_f64()));
    attach(&mut rep, "delta", "constants of the fibre", 2, cx.delta_kernel(cfg.seed))?;
    if let (Some(a), Some(b), Some(c)) = (ps, q1, q2) {
        rep.near("dim_sum", "dim q1 + dim q2", a as f64, (b + c) as f64, 0.0);
    }
    rep.timing.push(("total".into(), t.elapsed().as_secs_f64()));
    Ok(rep)
}

fn disk_points(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> Vec<C> {
    (0..n).map(|_| C::from_polar(radius * rng.gen::<f64>().sqrt(), 2.0 * PI * rng.gen::<f64>())).collect()
}

pub fn cmd_verify_model(cfg: &RunConfig, perturb: f64) -> Result<ReportDocument, CliError> {
    let t = Instant::now();
    let e = cfg.integer_exponent().map_err(CliError::Usage)?;
    let mut rep = ReportDocument::new("verify-model", cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pts = disk_points(&mut rng, 100, 0.9);
    if perturb != 0.0 {
        rep.notes.push(format!("log h perturbed by {perturb} |z|^4"));
    }
    let log_h = move |z: C| model_log_metric(z, e) + perturb * z.norm_sqr().powi(2);
    let ddbar = move |z: C| e / (1.0 - z.norm_sqr()).powi(2) + 4.0 * perturb * z.norm_sqr();
    let gamma = move |z: C| model_gamma(z, e) + 2.0 * perturb * z.norm_sqr() * z.conj();

    let res = verify_curvature_identity(Derivative::Analytic(&ddbar), e, &pts);
    rep.below("curvature_identity", "closed-form second derivative", res, cfg.tol("curvature_identity", 1e-10));
    let res_fd = verify_curvature_identity(Derivative::FiniteDifference(&log_h, 1e-3), e, &pts);
    rep.below("curvature_identity_fd", "finite differences of log h", res_fd, cfg.tol("curvature_identity_fd", 1e-6));

    let kappa = 2.0 / e;
    let mut dtheta: f64 = 0.0;
    let mut fibre: f64 = 0.0;
    for &z in &pts {
        let w = C::from_polar((-0.5 * log_h(z)).exp(), 2.0 * PI * rng.gen::<f64>());
        let th = contact_form(&log_h, &gamma, kappa, z, w).map_err(ctx("contact form"))?;
        fibre = fibre.max((th.on_fibre_generator() - kappa).abs());
        let p = [z.re, z.im, w.re, w.im];
        let step = 1e-3 * (1.0 - z.norm_sqr());
        let d = exterior_derivative_fd(&|q: &[f64; 4]| contact_form_real(&gamma, kappa, q), &p, step);
        dtheta = dtheta.max((d - area_form_pullback(z)).abs().max() / rho(z));
    }
    rep.below("contact_dtheta", "pullback of the area form", dtheta, cfg.tol("contact_dtheta", 1e-9));
    rep.below("contact_fibre", "theta on the fibre generator equals kappa", fibre, cfg.tol("contact_fibre", 1e-12));

    let mut inv: f64 = 0.0;
    for _ in 0..100 {
        let a = random_su11(&mut rng, 0.9).with_phase(C::from_polar(1.0, 2.0 * PI * rng.gen::<f64>()));
        let z = disk_points(&mut rng, 1, 0.9)[0];
        let w = C::from_polar(0.1 + rng.gen::<f64>(), 2.0 * PI * rng.gen::<f64>());
        let (z1, w1) = model_group_action(&a, z, w, e).map_err(ctx("group action"))?;
        let n0 = model_norm(z, w, e);
        inv = inv.max((model_norm(z1, w1, e) - n0).abs() / n0);
    }
    rep.below("group_invariance", "invariant norm |w|^2/(1-|z|^2)^e", inv, cfg.tol("group_invariance", 1e-10));

    let group = fuchsian_group(cfg.genus, cfg.m).map_err(ctx("Fuchsian group"))?;
    let rel = group_relation_residual(&group);
    rep.below("relation_residual", "product of commutators is the identity, relative to the word conditioning", rel / relation_condition(&group), cfg.tol("relation_residual", 1e-13));
    rep.notes.push(format!("absolute relation residual {rel:.3e}"));
    rep.below("deck_covariance", "log h(gz) + e log|g'| = log h(z)", group_covariance_defect(&group, &pts), cfg.tol("deck_covariance", 1e-10));

    let mesh = build_mesh(cfg)?;
    match reduced_tw_curvature(&ddbar, e, &mesh) {
        Ok(c) => rep.below("tw_curvature_certificate", "curvature identity at mesh vertices", c.identity_residual, c.tolerance),
        Err(err) => {
            rep.notes.push(format!("{err}"));
            rep.flag("tw_curvature_certificate", "curvature identity at mesh vertices", false);
        }
    }
    if cfg.plots {
        let vals: Vec<f64> = mesh.representatives().iter().map(|&v| {
            let z = mesh.vertices[v];
            ddbar(z) - 0.25 * e * rho(z)
        }).collect();
        rep.artifacts.push(vertex_plot(&mesh, &vals, "curvature_defect", "ddbar log h - (e/4) rho"));
    }
    let fd_check = ddbar_fd(&log_h, C::new(0.0, 0.0), 1e-3) - ddbar(C::new(0.0, 0.0));
    rep.below("ddbar_routes_agree", "closed form against finite differences", fd_check.abs(), cfg.tol("ddbar_routes_agree", 1e-6));
    rep.timing.push(("total".into(), t.elapsed().as_secs_f64()));
    Ok(rep)
}

pub fn cmd_yamabe(cfg: &RunConfig, amplitude: f64) -> Result<ReportDocument, CliError> {
    let t = Instant::now();
    if !(0.0..1.0).contains(&amplitude) {
        return Err(CliError::Usage(format!("amplitude must lie in [0, 1), got {amplitude}")));
    }
    let mut rep = ReportDocument::new("yamabe", cfg);
    let mesh = build_mesh(cfg)?;
    let n = mesh.n_quotient();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let p = YamabeProblem { mesh: &mesh, r_hat: vec![-1.0; n], r_target: -1.0 };
    let (mut worst, mut steps, mut bounds) = (0.0f64, 0usize, true);
    let mut last = None;
    for _ in 0..5 {
        let u0: Vec<f64> = (0..n).map(|_| 1.0 + amplitude * (2.0 * rng.gen::<f64>() - 1.0)).collect();
        let sol = yamabe_newton(&p, &u0, 50).map_err(ctx("Yamabe Newton"))?;
        worst = worst.max(sol.u.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max));
        steps = steps.max(sol.iterations);
        bounds &= maximum_principle_bounds(&sol.u, &p.r_hat).map_err(ctx("bounds"))?.pass;
        rep.notes.push(format!("start converged in {} steps, residual history {:?}", sol.iterations, sol.history.iter().map(|h| format!("{h:.2e}")).collect::<Vec<_>>()));
        last = Some(sol.u);
    }
    rep.below("distance_to_one", "uniqueness: the solution is identically 1", worst, cfg.tol("distance_to_one", 1e-8));
    rep.below("newton_steps", "at most 12 Newton steps", steps as f64, 12.0);
    rep.flag("maximum_principle", "sqrt(min -R) <= u <= sqrt(max -R)", bounds);

    // variable negative curvature: the solution is no longer constant
    let c0 = C::new(0.1, -0.05);
    let r_var: Vec<f64> = mesh.representatives().iter().map(|&v| -1.0 - 0.5 * bump(mesh.vertices[v], c0, 0.6)).collect();
    let pv = YamabeProblem { mesh: &mesh, r_hat: r_var.clone(), r_target: -1.0 };
    let sol = yamabe_newton(&pv, &vec![1.0; n], 50).map_err(ctx("Yamabe Newton"))?;
    let b = maximum_principle_bounds(&sol.u, &r_var).map_err(ctx("bounds"))?;
    rep.notes.push(format!("variable curvature: {} steps, margins {:.3e} / {:.3e}", sol.iterations, b.lower_margin, b.upper_margin));
    rep.flag("maximum_principle_variable", "sqrt(min -R) <= u <= sqrt(max -R)", b.pass);
    if cfg.plots {
        if let Some(u) = &last {
            rep.artifacts.push(vertex_plot(&mesh, u, "yamabe_u", "converged u"));
        }
        rep.artifacts.push(vertex_plot(&mesh, &sol.u, "yamabe_u_variable", "u for variable curvature"));
    }
    rep.timing.push(("total".into(), t.elapsed().as_secs_f64()));
    Ok(rep)
}

pub fn cmd_split(cfg: &RunConfig, cases: usize) -> Result<ReportDocument, CliError> {
    let t = Instant::now();
    let mut rep = ReportDocument::new("split", cfg);
    let e = cfg.exponent();
    let mu = -e / 4.0;
    let mesh = build_mesh(cfg)?;
    let cx = DeformationComplex::new(&mesh, cfg.degree, mu).map_err(ctx("deformation complex"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut kr, mut orth, mut gauge) = (0.0f64, 0.0f64, 0.0f64);
    let mut last = None;
    for _ in 0..cases {
        let ee = cx.random_e(&mut rng);
        let s = cx.split_deformation(&ee).map_err(ctx("split"))?;
        kr = kr.max(s.kernel_residual);
        orth = orth.max(s.orthogonality);
        let v = cx.random_pair(&mut rng);
        let pv = cx.apply_p(&v).map_err(ctx("apply P"))?;
        let g = cx.split_deformation(&pv).map_err(ctx("split"))?;
        gauge = gauge.max(g.e0_norm / g.e_norm);
        last = Some(s);
    }
    rep.below("kernel_residual", "adjoint of P annihilates E0", kr, cfg.tol("kernel_residual", 1e-8));
    rep.below("orthogonality", "<E0, P V> = 0", orth, cfg.tol("orthogonality", 1e-8));
    rep.below("pure_gauge", "E = P V gives E0 = 0", gauge, cfg.tol("pure_gauge", 1e-8));

    let c0 = C::new(0.1, 0.05);
    let v1 = move |z: C| C::new(bump(z, c0, 0.5), 0.0) * (z + 0.3);
    let v = move |z: C| C::new(bump(z, c0, 0.45), 0.0) * C::new(1.0, z.re);
    let fa = move |z: C| C::new(bump(z, -c0, 0.5), 0.0) * (z.conj() * z - 0.2);
    let fb = move |z: C| C::new(bump(z, -c0, 0.5), 0.0) * C::new(0.5, -z.im);
    let adj = cx.adjointness_defect((&v1, &v), (&fa, &fb)).map_err(ctx("adjointness"))?;
    rep.below("adjointness", "<P V, F> = <V, P* F> up to discretization", adj, cfg.tol("adjointness", 1e-2));

    let pts: Vec<C> = (0..20).map(|i| C::from_polar(0.4 * (i as f64 / 20.0), i as f64)).collect();
    let sv1 = |z: C| z * z + C::new(0.3, 0.0) * z.conj();
    let svs = |z: C| z.conj() * z * C::new(0.0, 1.0) + z;
    let lie = lie_derivative_check(&sv1, &svs, e, mu, &pts, 5e-3);
    rep.below("lie_derivative", "P V against the gauged Lie derivative of J", lie, cfg.tol("lie_derivative", 1e-6));
    if cfg.plots {
        if let Some(s) = last {
            let nq = mesh.n_quotient();
            let vals: Vec<f64> = s.v.v.values[..nq].iter().map(|x| x.norm()).collect();
            rep.artifacts.push(vertex_plot(&mesh, &vals, "split_v", "|v| of the gauge part"));
        }
    }
    rep.timing.push(("total".into(), t.elapsed().as_secs_f64()));
    Ok(rep)
}

pub fn cmd_sigma(cfg: &RunConfig, cases: usize) -> Result<ReportDocument, CliError> {
    let t = Instant::now();
    let e = cfg.integer_exponent().map_err(CliError::Usage)?;
    let mut rep = ReportDocument::new("sigma", cfg);
    let mesh = build_mesh(cfg)?;
    let n = mesh.n_quotient();
    let bound = injectivity_bound(&mesh);
    let reps = mesh.representatives();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut round, mut seam) = (0.0f64, 0.0f64);
    for _ in 0..cases {
        let amp = 0.25 * bound * rng.gen::<f64>();
        let v1: Vec<C> = reps
            .iter()
            .map(|&r| {
                let z = mesh.vertices[r];
                C::from_polar(amp * rng.gen::<f64>() * 0.5 * (1.0 - z.norm_sqr()), 2.0 * PI * rng.gen::<f64>())
            })
            .collect();
        let vs: Vec<C> = (0..n).map(|_| C::new(amp * (rng.gen::<f64>() - 0.5), amp * (rng.gen::<f64>() - 0.5))).collect();
        let x = InfinitesimalAuto { v1: SectionField { weight: (-1, 0), values: v1 }, vstar: SectionField { weight: (0, 0), values: vs } };
        let phi = sigma_map(&mesh, &x, e, bound).map_err(ctx("Sigma"))?;
        let back = sigma_inverse(&mesh, &phi, e, bound).map_err(ctx("inverse Sigma"))?;
        let d = x.v1.values.iter().zip(&back.v1.values).chain(x.vstar.values.iter().zip(&back.vstar.values)).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        round = round.max(d);
        seam = seam.max(seam_defect(&mesh, &x, e).map_err(ctx("seam"))?);
    }
    rep.below("round_trip", "inverse chart recovers X", round, cfg.tol("round_trip", 1e-8));
    rep.below("seam", "deck transport commutes with Sigma", seam, cfg.tol("seam", 1e-8));
    rep.timing.push(("total".into(), t.elapsed().as_secs_f64()));
    Ok(rep)
}

pub fn cmd_report(cfg: &RunConfig, extras: &Extras) -> Result<ReportDocument, CliError> {
    let mut rep = ReportDocument::new("report", cfg);
    for c in [Command::Mesh, Command::KernelDim, Command::VerifyModel, Command::Yamabe, Command::Split, Command::Sigma] {
        let mut sub = cfg.clone();
        if !extras.fixed_refinement {
            sub.refinement = c.default_refinement();
        }
        let doc = match c {
            Command::VerifyModel | Command::Sigma if cfg.integer_exponent().is_err() => {
                rep.notes.push(format!("{} skipped: (g-1) does not divide m", c.name()));
                continue;
            }
            _ => run(c, &sub, extras)?,
        };
        rep.merge(doc);
    }
    Ok(rep)
}
