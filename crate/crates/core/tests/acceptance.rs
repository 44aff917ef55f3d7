//! Acceptance suite: one line per criterion, then a non-zero exit if any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use psilap::bell::bell_identity_defect;
use psilap::boundary::{annihilate, correlator, create, number_operator, number_operator_laurent};
use psilap::laplacian::{stable_partition, tau_lookup, Convention, TauIndex};
use psilap::recursion::{certify_multi, dse_residual_one_point, one_point_family};
use psilap::ring::rational::{format_rational, rat};
use psilap::ring::{MomentMonomial, MomentPoly, ZLaurent};
use psilap::spectral::{
    odd_part_coefficients, planar_one_point, solve_c, solve_spectral, Generator, Level,
    SpectralModel, DEFAULT_TOL,
};
use psilap::virasoro::{constraint_suite, first_block};

const C1_BUDGET: Duration = Duration::from_secs(1);
const C2_GATE: Duration = Duration::from_secs(120);
const C2_STRETCH: Duration = Duration::from_secs(35);
const C3_BUDGET: Duration = Duration::from_secs(60);
const NEWTON_VS_BISECTION: f64 = 1e-10;
const RENORMALISATION: f64 = 1e-10;
const ODD_SERIES: f64 = 1e-8;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Debug>(e: E) -> String {
    format!("{e:?}")
}

/// `"2^3 5"` is the multiset {2, 2, 2, 5}.
fn indices(spec: &str) -> Vec<u32> {
    spec.split_whitespace()
        .flat_map(|tok| {
            let (d, k) = tok.split_once('^').unwrap_or((tok, "1"));
            std::iter::repeat(d.parse::<u32>().unwrap()).take(k.parse().unwrap())
        })
        .collect()
}

const F2_TABLE: [(&str, &str); 3] = [("2^3", "7/240"), ("2 3", "29/5760"), ("4", "1/1152")];

const F3_TABLE: [(&str, &str); 11] = [
    ("2^6", "1225/144"),
    ("2^4 3", "193/288"),
    ("2^2 3^2", "205/3456"),
    ("2^3 4", "53/1152"),
    ("3^3", "583/96768"),
    ("2 3 4", "1121/241920"),
    ("2^2 5", "17/5760"),
    ("4^2", "607/1451520"),
    ("3 5", "503/1451520"),
    ("2 6", "77/414720"),
    ("7", "1/82944"),
];

const F4_TABLE: [(&str, &str); 30] = [
    ("2^9", "1816871/48"),
    ("2^7 3", "3326267/1728"),
    ("2^5 3^2", "728465/6912"),
    ("2^3 3^3", "43201/6912"),
    ("2 3^4", "134233/331776"),
    ("2^6 4", "70735/864"),
    ("2^4 3 4", "83851/17280"),
    ("2^2 3^2 4", "26017/82944"),
    ("3^3 4", "185251/8294400"),
    ("2^3 4^2", "5609/23040"),
    ("2 3 4^2", "177/10240"),
    ("4^3", "175/165888"),
    ("2^5 5", "21329/6912"),
    ("2^3 3 5", "13783/69120"),
    ("2 3^2 5", "1837/129600"),
    ("2^2 4 5", "7597/691200"),
    ("3 4 5", "719/829440"),
    ("2 5^2", "533/967680"),
    ("2^4 6", "2471/23040"),
    ("2^2 3 6", "7897/1036800"),
    ("3^2 6", "1997/3317760"),
    ("2 4 6", "1081/2322432"),
    ("5 6", "487/18579456"),
    ("2^3 7", "4907/1382400"),
    ("2 3 7", "16243/58060800"),
    ("4 7", "1781/92897280"),
    ("2^2 8", "53/460800"),
    ("3 8", "947/92897280"),
    ("2 9", "149/39813120"),
    ("10", "1/7962624"),
];

fn c1_printed_free_energies() -> Outcome {
    let start = Instant::now();
    let sp = stable_partition(4, Convention::T).map_err(err)?;
    let elapsed = start.elapsed();
    let tables: [(u32, &[(&str, &str)]); 3] = [(2, &F2_TABLE), (3, &F3_TABLE), (4, &F4_TABLE)];
    let mut checked = 0;
    for (g, table) in tables {
        let f = sp.f(g).map_err(err)?;
        ensure(f.len() == table.len(), || {
            format!("F{g} has {} monomials, the display lists {}", f.len(), table.len())
        })?;
        for (spec, expected) in table {
            let idx = TauIndex::new(indices(spec)).map_err(err)?;
            ensure(idx.genus() == g, || format!("{spec} is not genus {g}"))?;
            let got = format_rational(&tau_lookup(&idx, &sp).map_err(err)?);
            ensure(got == *expected, || format!("F{g} <{spec}>: {got} != {expected}"))?;
            checked += 1;
        }
    }
    ensure(elapsed < C1_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("{checked} coefficients equal, computed in {elapsed:.2?}"))
}

fn c2_top_intersections() -> Outcome {
    let start = Instant::now();
    let output = Command::new(env!("CARGO_BIN_EXE_psilap"))
        .args(["fg", "--gmax", "10", "--convention", "t", "--format", "json"])
        .output()
        .map_err(err)?;
    let elapsed = start.elapsed();
    ensure(output.status.success(), || {
        format!("fg exited with {:?}", output.status.code())
    })?;
    let doc: serde_json::Value = serde_json::from_slice(&output.stdout).map_err(err)?;
    for g in 2..=10u32 {
        let denominator = (1..=g as u128).product::<u128>() * 24u128.pow(g);
        let expected = format!("1/{denominator}");
        let key = format!("t{}/T0^{}", 3 * g - 2, 2 * g - 1);
        let got = doc["F"][g.to_string()][&key]["normalized"].as_str();
        ensure(got == Some(expected.as_str()), || {
            format!("g={g}: {key} carries {got:?}, expected {expected}")
        })?;
    }
    ensure(elapsed <= C2_GATE, || format!("fg --gmax 10 took {elapsed:?}"))?;
    let stretch = if elapsed <= C2_STRETCH { "within" } else { "outside" };
    Ok(format!(
        "g=2..10 exact; fg --gmax 10 in {elapsed:.1?} ({stretch} the 35 s stretch target)"
    ))
}

fn c3_dual_path() -> Outcome {
    let start = Instant::now();
    let recursive = one_point_family(5).map_err(err)?;
    for g in 1..=5u32 {
        let laplacian = &correlator(g, 1).map_err(err)?.value;
        ensure(*laplacian == recursive[g as usize - 1], || format!("g={g} differs"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < C3_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("g=1..5 identical, {elapsed:.2?}"))
}

fn mono(e0: i32, pairs: &[(u32, u32)]) -> MomentMonomial {
    MomentMonomial::new(e0, pairs.iter().copied())
}

fn c4_closed_forms() -> Outcome {
    // In 2 lambda = 1 units: 2 lambda^4 = (2 lambda)^4 / 8 and 32 lambda^5 = (2 lambda)^5.
    let g1 = correlator(1, 1).map_err(err)?;
    let expected = ZLaurent::from_exponents(
        &["z1".into()],
        [
            (vec![-3], MomentPoly::term(mono(-2, &[(1, 1)]), rat(1, 8))),
            (vec![-5], MomentPoly::term(mono(-1, &[]), rat(-1, 8))),
        ],
    );
    ensure(g1.value == expected && g1.lambda_exponent == 4, || {
        format!("G1 = {} with (2 lambda)^{}", g1.value, g1.lambda_exponent)
    })?;
    let g0 = correlator(0, 3).map_err(err)?;
    let names: Vec<String> = ["z1", "z2", "z3"].iter().map(|s| s.to_string()).collect();
    let expected = ZLaurent::from_exponents(
        &names,
        [(vec![-3, -3, -3], MomentPoly::term(mono(-1, &[]), rat(-1, 1)))],
    );
    ensure(g0.value == expected && g0.lambda_exponent == 5, || {
        format!("G0(z1|z2|z3) = {} with (2 lambda)^{}", g0.value, g0.lambda_exponent)
    })?;
    Ok("G1(z) and G0(z1|z2|z3) exact".into())
}

fn c5_loop_equations() -> Outcome {
    for g in 1..=4 {
        let r = dse_residual_one_point(g).map_err(err)?;
        ensure(r.is_zero(), || format!("one-point g={g}: residual {r}"))?;
    }
    let mut detail = Vec::new();
    for (g, b) in [(0, 3), (0, 4), (1, 2), (1, 3), (2, 2)] {
        let cert = certify_multi(g, b).map_err(err)?;
        ensure(cert.holds(), || {
            format!(
                "(g,B)=({g},{b}): symbolic zero {}, {} nonzero of {} points",
                cert.symbolic_zero, cert.nonzero_points, cert.points
            )
        })?;
        detail.push(format!("({g},{b}):{}", cert.points));
    }
    Ok(format!(
        "one-point g<=4 zero; multi-boundary zero at certified points {}",
        detail.join(" ")
    ))
}

/// Partitions of `w` into parts `>= 1`, each as (part, multiplicity) pairs.
fn partitions(w: u32, max_part: u32) -> Vec<Vec<(u32, u32)>> {
    if w == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for part in (1..=max_part.min(w)).rev() {
        for k in 1..=w / part {
            for mut rest in partitions(w - k * part, part - 1) {
                rest.push((part, k));
                out.push(rest);
            }
        }
    }
    out
}

fn stable_pairs(limit: i64) -> Vec<(u32, usize)> {
    let mut out = Vec::new();
    for g in 0..=4u32 {
        for b in 1..=10usize {
            let chi = 2 * g as i64 + b as i64 - 2;
            if chi > 0 && chi <= limit {
                out.push((g, b));
            }
        }
    }
    out
}

fn drop_first_boundary(f: &ZLaurent, b: usize) -> Result<ZLaurent, String> {
    let mut out = annihilate(f, "z1").map_err(err)?;
    for i in 2..=b {
        out = out.rename(&format!("z{i}"), &format!("z{}", i - 1)).map_err(err)?;
    }
    Ok(out)
}

fn c6_operator_algebra() -> Outcome {
    for g in 1..=3 {
        let f = &correlator(g, 1).map_err(err)?.value;
        ensure(create(&create(f, "z2"), "z3") == create(&create(f, "z3"), "z2"), || {
            format!("creations do not commute on G{g}(z1)")
        })?;
    }
    let mut basis = 0;
    for w in 0..=8 {
        for parts in partitions(w, 8) {
            for e0 in -4..=1 {
                let p = MomentPoly::term(MomentMonomial::new(e0, parts.clone()), rat(1, 1));
                let round = annihilate(&create(&ZLaurent::from_poly(p.clone()), "z"), "z")
                    .map_err(err)?
                    .to_moment_poly()
                    .ok_or("variables survived annihilation")?;
                ensure(round == number_operator(&p), || format!("A A^dag != N on {p}"))?;
                basis += 1;
            }
        }
    }
    let pairs = stable_pairs(8);
    for &(g, b) in &pairs {
        let c = &correlator(g, b).map_err(err)?.value;
        let euler = 2 * g as i64 + b as i64 - 2;
        ensure(number_operator_laurent(c) == c.scale(&rat(euler, 1)), || {
            format!("N G_{g} with B={b} is not {euler} G")
        })?;
    }
    let mut removed = 0;
    for &(g, b) in &pairs {
        let factor = 2 * g as i64 + b as i64 - 3;
        if b < 2 || factor <= 0 {
            continue;
        }
        let lhs = drop_first_boundary(&correlator(g, b).map_err(err)?.value, b)?;
        let rhs = correlator(g, b - 1).map_err(err)?.value.scale(&rat(factor, 1));
        ensure(lhs == rhs, || format!("annihilation on (g,B)=({g},{b})"))?;
        removed += 1;
    }
    Ok(format!(
        "commuting creations; A A^dag = N on {basis} monomials; N eigenvalue on {} correlators; {removed} annihilations",
        pairs.len()
    ))
}

fn c7_virasoro() -> Outcome {
    let suite = constraint_suite(5, 17).map_err(err)?;
    for (n, r) in &suite {
        ensure(r.is_zero(), || format!("L_{n} Z at order {:?}", r.first_nonzero()))?;
    }
    let sp = stable_partition(6, Convention::Rho).map_err(err)?;
    for g in 2..=6 {
        let f = sp.f(g).map_err(err)?;
        let r = first_block(0, f.max_index()).apply(f);
        ensure(r.is_zero(), || format!("L0 F{g} = {r}"))?;
    }
    let xs: Vec<MomentPoly> = (1..=10).map(MomentPoly::var).collect();
    let mut identities = 0;
    for n in 1..=10 {
        for k in 0..=n {
            let d = bell_identity_defect(n, k, &xs);
            ensure(d.is_zero(), || format!("Bell identity n={n} k={k}: {d}"))?;
            identities += 1;
        }
    }
    Ok(format!(
        "L_0..L_17 annihilate Z through g=5; L0 F_g = 0 for g=2..6; {identities} Bell identities"
    ))
}

fn partition_number(n: usize) -> usize {
    let mut p = vec![0usize; n + 1];
    p[0] = 1;
    for part in 1..=n {
        for m in part..=n {
            p[m] += p[m - part];
        }
    }
    p[n]
}

fn c8_structure() -> Outcome {
    let sp = stable_partition(6, Convention::Rho).map_err(err)?;
    let mut counts = Vec::new();
    for g in 2..=6u32 {
        let f = sp.f(g).map_err(err)?;
        let expected = partition_number(3 * g as usize - 3);
        ensure(f.len() == expected, || format!("F{g}: {} monomials, p = {expected}", f.len()))?;
        ensure(f.weight().ok() == Some(3 * g - 3), || format!("F{g} weight {:?}", f.weight()))?;
        counts.push(f.len());
    }
    ensure(counts == [3, 11, 30, 77, 176], || format!("counts {counts:?}"))?;
    for g in 1..=6u32 {
        let c = &correlator(g, 1).map_err(err)?.value;
        ensure(c.is_odd_in("z1"), || format!("G{g}(z) is not odd"))?;
        let (lo, _) = c.exponent_range("z1").ok_or("empty correlator")?;
        ensure(lo >= -(6 * g as i32 + 1), || format!("G{g}(z) has a pole of order {}", -lo))?;
    }
    Ok(format!("counts {counts:?}, weights 3g-3, G_g(z) odd with pole order <= 6g+1 for g<=6"))
}

fn grid(dimension: u32, lambda: f64) -> SpectralModel {
    let gen = Generator {
        e: "linear".into(),
        cutoff_n: 16,
        mu2: 1.0,
    };
    SpectralModel::generated(dimension, lambda, 4.0, &gen).expect("valid model")
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (f(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn c9_spectral() -> Outcome {
    let free = solve_spectral(&grid(4, 0.0), 5, DEFAULT_TOL).map_err(err)?;
    ensure(free.c == 0.0 && free.moments == [1.0, 0.0, 0.0, 0.0, 0.0, 0.0], || {
        format!("lambda=0 gives {free:?}")
    })?;
    let z = Complex64::new(0.3, 1.7);
    ensure(planar_one_point(&free, &grid(4, 0.0), z).map_err(err)? == z, || {
        "G0(z) != z at lambda=0".into()
    })?;

    let single = SpectralModel::new(0, 0.1, 1.0, vec![Level { e: 1.0, mult: 1 }]).map_err(err)?;
    let newton = solve_c(&single, DEFAULT_TOL).map_err(err)?;
    // 1 - sqrt(1+c) = (1/2) * 2 (2 lambda)^2 / sqrt(4 + c), written out by hand.
    let scalar = |c: f64| 1.0 - (1.0 + c).sqrt() - 0.5 * 2.0 * 0.04 / (4.0 + c).sqrt();
    let oracle = bisect(scalar, -0.5, 0.5);
    let gap = (newton - oracle).abs();
    ensure(gap < NEWTON_VS_BISECTION, || format!("newton {newton} vs bisection {oracle}"))?;

    let mut worst_w = 0.0f64;
    for d in [2, 4] {
        let m = grid(d, 0.2);
        let data = solve_spectral(&m, 3, DEFAULT_TOL).map_err(err)?;
        let w = |x: Complex64| planar_one_point(&data, &m, (x + data.c).sqrt());
        let at_one = w(Complex64::new(1.0, 0.0)).map_err(err)?.re;
        worst_w = worst_w.max((at_one - 1.0).abs());
        if d == 4 {
            // Complex-step derivative in X, independent of the closed form used to solve for nu.
            let h = 1e-20;
            let slope = w(Complex64::new(1.0, h)).map_err(err)?.im / h;
            worst_w = worst_w.max((slope - 0.5).abs());
        }
    }
    ensure(worst_w < RENORMALISATION, || format!("renormalisation defect {worst_w:e}"))?;

    let mut worst_series = 0.0f64;
    for d in [0, 2, 4] {
        let m = grid(d, 0.2);
        let data = solve_spectral(&m, 8, DEFAULT_TOL).map_err(err)?;
        let series = odd_part_coefficients(&data, &m, 8, 128).map_err(err)?;
        for (a, b) in series.iter().zip(&data.moments) {
            worst_series = worst_series.max((a - b).abs());
        }
    }
    ensure(worst_series < ODD_SERIES, || format!("series defect {worst_series:e}"))?;
    Ok(format!(
        "lambda=0 exact; |newton-bisection| = {gap:.1e}; renormalisation defect {worst_w:.1e}; series defect {worst_series:.1e}"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("C1 printed F2, F3, F4 in t-convention", c1_printed_free_energies),
        ("C2 top intersections and fg --gmax 10 runtime", c2_top_intersections),
        ("C3 Laplacian and residue one-point functions agree", c3_dual_path),
        ("C4 closed-form G1(z) and planar three-point", c4_closed_forms),
        ("C5 loop-equation residuals vanish", c5_loop_equations),
        ("C6 boundary operator algebra", c6_operator_algebra),
        ("C7 Virasoro constraints and Bell identity", c7_virasoro),
        ("C8 free-energy structure", c8_structure),
        ("C9 spectral pipeline", c9_spectral),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {name}: {why}");
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
