//! Acceptance criteria. Runs every criterion, prints one `[PASS]`/`[FAIL]`
//! line each (with sub-check lines underneath), and exits nonzero if any
//! criterion fails.

use std::time::Instant;

use irs_paoi::frame_timing::{derive_timing, overhead_time, packets_per_update, FrameTiming};
use irs_paoi::hitting::{hitting_curves, jump_length_density, leg_time_density, LengthLaw};
use irs_paoi::irs_field::{illuminated_radius, irs_gain, phase_profile, snr_map, wide_beam_profile, FocusMap, GridSpec};
use irs_paoi::mobility_mc::{first_exit_time_mc, occupation_fractions_mc, OccupancyRule, StartPoint};
use irs_paoi::mrgp::{find_crossover, steady_state_at};
use irs_paoi::paoi::{evaluate, optimize_t_upd, sweep_radius, UpdateGrid};
use irs_paoi::{MobilitySpec, ScenarioConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const V1: MobilitySpec = MobilitySpec::ConstantSpeed { speed_mps: 1.0 };
const PAUSE: MobilitySpec = MobilitySpec::WithPause { speed_mps: 1.0, pause_mean_s: 2.0 };
const RANDOM: MobilitySpec = MobilitySpec::RandomSpeed { v_min_mps: 0.5, v_max_mps: 1.5 };

struct Check {
    ok: bool,
}

impl Check {
    fn new() -> Self {
        Check { ok: true }
    }

    fn sub(&mut self, name: &str, ok: bool, detail: String) {
        println!("    {} {name}: {detail}", if ok { "ok  " } else { "FAIL" });
        self.ok &= ok;
    }
}

fn criterion(id: u32, name: &str, body: impl FnOnce(&mut Check)) -> bool {
    println!("criterion {id}: {name}");
    let start = Instant::now();
    let mut c = Check::new();
    body(&mut c);
    println!("[{}] criterion {id}: {name} ({:.1} s)", if c.ok { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
    c.ok
}

fn hitting_validation(c: &mut Check) {
    let cfg = ScenarioConfig::reference();
    let trials = cfg.numerics.mc_trials;
    for spec in [V1, PAUSE, RANDOM] {
        let start = Instant::now();
        let h = hitting_curves(&spec, 1.0, 3.0, &cfg.numerics, cfg.model.leg_convention).unwrap();
        let mc = first_exit_time_mc(&spec, 1.0, 3.0, StartPoint::UniformInner, trials, cfg.numerics.rng_seed).unwrap();
        // P_in = 1 - F_exit, so the gap is the same on either curve.
        let sup = mc.sup_distance(&h.p_fh_out);
        let secs = start.elapsed().as_secs_f64();
        c.sub(&format!("{} sup|P_in - MC|", spec.name()), sup <= 0.05, format!("{sup:.4} (<= 0.05, {trials} trials)"));
        c.sub(&format!("{} runtime", spec.name()), secs <= 60.0, format!("{secs:.2} s (<= 60 s)"));
    }
}

fn occupation_fractions(c: &mut Check) {
    let cfg = ScenarioConfig::reference();
    let g = &cfg.geometry;
    let timing = derive_timing(&cfg.frame, &cfg.panel, g);
    let h = hitting_curves(&cfg.mobility, g.r_in_m, g.r_out_m, &cfg.numerics, cfg.model.leg_convention).unwrap();
    let cycles = 2000.0;
    for t_upd in [0.5, 1.0, 2.0, 4.0] {
        let a = steady_state_at(&timing, &h, t_upd, &cfg.model).unwrap();
        let m = occupation_fractions_mc(&cfg.mobility, g.r_in_m, g.r_out_m, timing.t_conf(), t_upd, cycles * t_upd, cfg.numerics.rng_seed, OccupancyRule::FirstExit)
            .unwrap();
        let gap = (a.pi1 - m.pi1).abs().max((a.pi2 - m.pi2).abs()).max((a.pi3 - m.pi3).abs());
        c.sub(
            &format!("t_upd={t_upd}"),
            gap <= 0.05,
            format!("analytic ({:.4}, {:.4}, {:.4}) vs MC ({:.4}, {:.4}, {:.4}), max gap {gap:.4}", a.pi1, a.pi2, a.pi3, m.pi1, m.pi2, m.pi3),
        );
    }
    for t_upd in [1e-3, 0.5 * timing.t_conf(), timing.t_conf()] {
        let a = steady_state_at(&timing, &h, t_upd, &cfg.model).unwrap();
        let m = occupation_fractions_mc(&cfg.mobility, g.r_in_m, g.r_out_m, timing.t_conf(), t_upd, 1.0, 1, OccupancyRule::FirstExit).unwrap();
        c.sub(&format!("pi1 at t_upd={t_upd:.5} <= T_conf"), a.pi1 == 1.0 && m.pi1 == 1.0, format!("analytic {}, MC {}", a.pi1, m.pi1));
    }
}

fn crossover(c: &mut Check) {
    let cfg = ScenarioConfig::reference();
    let g = &cfg.geometry;
    let timing = derive_timing(&cfg.frame, &cfg.panel, g);
    let h = hitting_curves(&V1, 1.7, g.r_out_m, &cfg.numerics, cfg.model.leg_convention).unwrap();
    let x = find_crossover(&timing, &h, &cfg.model, 0.1, 20.0, 0.01).unwrap();
    match x {
        Some(t) => c.sub("pi'2 = pi'3 crossing", (t - 4.6).abs() <= 1.0, format!("t_upd = {t:.3} s (4.6 +/- 1.0)")),
        None => c.sub("pi'2 = pi'3 crossing", false, "no crossing in [0.1, 20] s".into()),
    }
}

fn optimum(c: &mut Check) {
    let cfg = ScenarioConfig::reference();
    let (timing, _, curve) = evaluate(&cfg, &UpdateGrid::from_config(&cfg)).unwrap();
    let (t, p) = optimize_t_upd(&curve);
    let ratio = overhead_time(&timing, t) / t;
    c.sub("t_upd*", (t - 1.9).abs() <= 0.6, format!("{t:.5} s (1.9 +/- 0.6)"));
    c.sub("min average PAoI", (1e-4..=1e-3).contains(&p), format!("{:.2} us ([100, 1000] us)", p * 1e6));
    c.sub("overhead ratio", (0.08..=0.12).contains(&ratio), format!("{:.2} % ([8, 12] %)", ratio * 100.0));
}

fn frame_timing(c: &mut Check) {
    let cfg = ScenarioConfig::reference();
    let t = derive_timing(&cfg.frame, &cfg.panel, &cfg.geometry);
    let rel = |x: f64, r: f64| (x - r).abs() / r;
    c.sub("t_data", rel(t.t_data, 260e-6) <= 0.02, format!("{:.2} us (260 +/- 2 %)", t.t_data * 1e6));
    c.sub("t_irs", rel(t.t_irs, 105.4e-6) <= 0.10, format!("{:.2} us (105.4 +/- 10 %)", t.t_irs * 1e6));
    c.sub("t_loc", rel(t.t_loc, 15e-3) <= 0.15, format!("{:.3} ms (15 +/- 15 %)", t.t_loc * 1e3));
    c.sub("derived t_p_ovh (gap to 5.3 us)", t.t_p_ovh > 0.0, format!("{:.3} us", t.t_p_ovh * 1e6));
    let mut frame = cfg.frame.clone();
    frame.t_p_ovh_override_s = Some(5.3e-6);
    let o = derive_timing(&frame, &cfg.panel, &cfg.geometry);
    c.sub("t_p_ovh override", o.t_p_ovh == 5.3e-6, format!("{:e} s", o.t_p_ovh));
}

fn radius_sweep(c: &mut Check) {
    let cfg = ScenarioConfig::reference();
    let radii = [0.3, 0.8, 1.2, 1.7];
    let rows = sweep_radius(&cfg, &radii, &[V1, PAUSE]);
    let opt = |r: f64, v: &str| {
        let row = rows.iter().find(|x| x.r_in_m == r && x.variant == v).unwrap();
        row.t_upd_opt_s.unwrap_or_else(|| panic!("sweep cell failed: {:?}", row.error))
    };
    let mut prev = 0.0;
    for r in radii {
        let (tc, tp) = (opt(r, "constant"), opt(r, "pause"));
        c.sub(&format!("r={r} constant in [r/v, 2r/v]"), tc >= r && tc <= 2.0 * r, format!("t* = {tc:.5} s"));
        c.sub(&format!("r={r} monotone"), tc >= prev, format!("{tc:.5} >= {prev:.5}"));
        c.sub(&format!("r={r} pause > constant"), tp > tc, format!("{tp:.5} > {tc:.5}"));
        prev = tc;
    }
}

fn packed(t: &FrameTiming, t_upd: f64) -> u64 {
    let mut n = 0;
    while t.t_conf() + n as f64 * t.packet_period() < t_upd - 1e-12 {
        n += 1;
    }
    n
}

fn replay_fingerprint() -> String {
    let mut cfg = ScenarioConfig::reference();
    cfg.optimizer.t_upd_step_s = 1e-3;
    let (_, h, curve) = evaluate(&cfg, &UpdateGrid::from_config(&cfg)).unwrap();
    let mc = first_exit_time_mc(&PAUSE, 1.0, 3.0, StartPoint::UniformInner, 1000, 7).unwrap();
    let occ = occupation_fractions_mc(&V1, 1.7, 3.0, 0.02, 2.0, 500.0, 7, OccupancyRule::FirstExit).unwrap();
    format!("{:?}{:?}{:?}{:?}", h.p_in.values, curve, mc.samples, occ)
}

fn property_suites(c: &mut Check) {
    let cfg = ScenarioConfig::reference();
    let nm = &cfg.numerics;

    let mut worst: f64 = 0.0;
    for spec in [V1, PAUSE, RANDOM] {
        for law in [LengthLaw::DiscPair { r: 3.0 }, LengthLaw::exit_from_uniform(1.7, 3.0), LengthLaw::CenterToUniform { r: 1.7 }] {
            let d = leg_time_density(&spec, &law, nm.dt_s, nm.n_grid());
            worst = worst.max((d.integral() + d.tail_mass - 1.0).abs());
        }
    }
    let l = jump_length_density(3.0, 1e-3).unwrap();
    worst = worst.max((l.integral() - 1.0).abs());
    c.sub("density normalization", worst <= 1e-3, format!("max |mass - 1| = {worst:.2e}"));

    let mut worst_in: f64 = 0.0;
    let mut worst_adj: f64 = 0.0;
    let timing = derive_timing(&cfg.frame, &cfg.panel, &cfg.geometry);
    for spec in [V1, PAUSE, RANDOM] {
        let h = hitting_curves(&spec, 1.7, 3.0, nm, cfg.model.leg_convention).unwrap();
        for (a, b) in h.p_in.values.iter().zip(&h.p_fh_out.values) {
            worst_in = worst_in.max((a + b - 1.0).abs());
        }
        for k in 0..400 {
            let s = steady_state_at(&timing, &h, 0.001 + 0.025 * k as f64, &cfg.model).unwrap();
            worst_adj = worst_adj.max((s.pi2_adj + s.pi3_adj - 1.0).abs());
        }
    }
    c.sub("P_in + P_fh_out = 1", worst_in <= 1e-12, format!("max deviation {worst_in:.1e}"));
    c.sub("pi'2 + pi'3 = 1", worst_adj == 0.0, format!("max deviation {worst_adj:.1e}"));

    let g = &cfg.geometry;
    let lambda = cfg.radio.wavelength();
    let focus = g.p_mu();
    let prof = phase_profile(&cfg.panel, g.p_irs_m, g.p_ap_m, &FocusMap::Point(focus), lambda);
    let bound = prof.g_tilde * prof.n_active() as f64;
    let at_focus = irs_gain(&prof, g.p_ap_m, focus).norm();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut bounded = true;
    for _ in 0..200 {
        let q = [rng.random_range(-1.0..5.0), rng.random_range(0.0..6.0), g.mu_plane_height_m];
        bounded &= irs_gain(&prof, g.p_ap_m, q).norm() <= bound * (1.0 + 1e-12);
    }
    c.sub(
        "triangle-inequality gain bound",
        bounded && ((at_focus - bound) / bound).abs() < 1e-9,
        format!("|g(focus)| / (g~ N) = {:.12}", at_focus / bound),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0;
    for _ in 0..10_000 {
        let t = FrameTiming {
            t_loc: rng.random_range(1e-4..0.05),
            t_irs: rng.random_range(1e-6..1e-3),
            t_p_ovh: rng.random_range(1e-6..1e-5),
            t_data: rng.random_range(1e-5..1e-3),
            t_idle: rng.random_range(1e-6..1e-4),
            t_d: 0.0,
        };
        let t_upd = rng.random_range(0.0..0.5);
        mismatches += usize::from(packets_per_update(&t, t_upd) != packed(&t, t_upd));
    }
    c.sub("c_h ceiling vs packing loop (1e4 timings)", mismatches == 0, format!("{mismatches} mismatches"));

    let same = replay_fingerprint() == replay_fingerprint();
    c.sub("deterministic replay", same, format!("identical: {same}"));
}

fn snr_threshold_radius(c: &mut Check) {
    let cfg = ScenarioConfig::reference();
    let g = &cfg.geometry;
    let prof = wide_beam_profile(&cfg);
    let field = snr_map(&cfg, &prof, &GridSpec::around(g.illum_center_m, 3.0, 0.05)).unwrap();
    let r = illuminated_radius(&field, 30.0, g.illum_center_m);
    c.sub(
        "illuminated_radius(30 dB)",
        (1.4..=2.0).contains(&r.radius_m),
        format!("{:.3} m ([1.4, 2.0] m), peak {:.1} dB, centre {:.1} dB", r.radius_m, field.max_db(), field.interpolate(g.illum_center_m[0], g.illum_center_m[1]).unwrap()),
    );

    let mut o = cfg.clone();
    o.geometry.r_in_m = 1.2;
    let (_, h, _) = evaluate(&o, &UpdateGrid { min: 0.5, max: 0.5, step: 1.0 }).unwrap();
    c.sub("r_in override honoured", h.r_in == 1.2, format!("kernel r_in = {}", h.r_in));
}

fn main() {
    let results = [
        criterion(1, "hitting-curve validation", hitting_validation),
        criterion(2, "occupation fractions", occupation_fractions),
        criterion(3, "crossover", crossover),
        criterion(4, "optimum", optimum),
        criterion(5, "frame timing", frame_timing),
        criterion(6, "radius sweep", radius_sweep),
        criterion(7, "property suites", property_suites),
        criterion(7, "SNR-threshold illuminated radius", snr_threshold_radius),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
