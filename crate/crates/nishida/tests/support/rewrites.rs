//! Seeded fuzzing of the expression rewrites, and the Nishida reduction in
//! the instability context of the loop-space argument.

use nishida::opcalc::{
    coh_degree, coh_weight, hom_degree, hom_weight, q_feasible, upper_index, Ambient, Calculus, CohExpr, Coproducts,
    FormalClass, HomExpr, ModuleContext, OpExpression,
};
use nishida::phi::make_phi_range;
use nishida::realize::Fixture;
use nishida::ssq::assumption_threshold;
use nishida::steenrod::SteenrodAlgebra;
use nishida::unstable::Coords;
use nishida::Prime;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn feasible_indices(p: Prime, d: i64, n: Ambient) -> Vec<u32> {
    (0..=12).filter(|&r| q_feasible(p, r, d, n)).collect()
}

/// A random cohomology expression whose leaves are suspensions, so that
/// the suspension rewrite applies to every star-free tree.
fn random_coh(rng: &mut ChaCha8Rng, p: Prime, n: Ambient, depth: u32) -> CohExpr {
    let leaf = |rng: &mut ChaCha8Rng| {
        let d = rng.gen_range(1..=8);
        CohExpr::leaf(FormalClass::cohomology(format!("x{}", rng.gen_range(0..3)), d - 1, 1).suspend())
    };
    if depth == 0 {
        return leaf(rng);
    }
    match rng.gen_range(0..4) {
        0 => leaf(rng),
        1 => {
            let arg = random_coh(rng, p, n, 0);
            let d = coh_degree(p, n, &arg).unwrap();
            let rs = feasible_indices(p, d, n);
            if rs.is_empty() {
                arg
            } else {
                CohExpr::q(rs[rng.gen_range(0..rs.len())], arg)
            }
        }
        2 => CohExpr::browder(vec![random_coh(rng, p, n, depth - 1), leaf(rng)]),
        _ => CohExpr::star(vec![random_coh(rng, p, n, depth - 1), leaf(rng)]),
    }
}

fn random_hom(rng: &mut ChaCha8Rng, p: Prime, n: Ambient, depth: u32) -> HomExpr {
    let leaf = |rng: &mut ChaCha8Rng| {
        HomExpr::leaf(FormalClass::homology(format!("y{}", rng.gen_range(0..3)), rng.gen_range(1..=6), 1))
    };
    if depth == 0 {
        return leaf(rng);
    }
    match rng.gen_range(0..4) {
        0 => leaf(rng),
        1 => {
            let arg = leaf(rng);
            let d = hom_degree(p, n, &arg).unwrap();
            let top = n.top_index(p).unwrap() as i64;
            let rs: Vec<i64> = (0..top).filter(|&r| matches!(upper_index(p, r, d), Some((0, _)))).collect();
            if rs.is_empty() {
                arg
            } else {
                HomExpr::q(rs[rng.gen_range(0..rs.len())] as u32, arg)
            }
        }
        2 => HomExpr::browder(random_hom(rng, p, n, depth - 1), leaf(rng)),
        _ => HomExpr::product(vec![random_hom(rng, p, n, depth - 1), leaf(rng)]),
    }
}

fn check_coh_terms(p: Prime, n: Ambient, e: &CohExpr, degree: i64, weight: u32) -> Result<(), String> {
    for (_, t) in e.summands() {
        let (d, w) = (coh_degree(p, n, t).map_err(|e| e.to_string())?, coh_weight(p, t).map_err(|e| e.to_string())?);
        if (d, w) != (degree, weight) {
            return Err(format!("term {t}: degree {d} weight {w}, expected {degree} and {weight}"));
        }
    }
    Ok(())
}

/// Runs rewrites until `target` have succeeded; returns the per-kind counts.
pub fn fuzz(target: usize, seed: u64) -> [usize; 4] {
    let p = Prime::new(3).unwrap();
    let alg = SteenrodAlgebra::new(p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut done = [0usize; 4];
    let mut attempts = 0;
    while done.iter().sum::<usize>() < target {
        attempts += 1;
        assert!(attempts < 20 * target, "too many unsupported rewrites");
        let n = Ambient::new(rng.gen_range(2..=5)).unwrap();
        let calc = Calculus::new(&alg, n);
        let kind = rng.gen_range(0..4);
        match kind {
            0 => {
                let root = random_coh(&mut rng, p, n, 2);
                let Ok(root) = calc.canonical(&root) else { continue };
                if root.is_zero() {
                    continue;
                }
                let e = OpExpression { p, n, root };
                let (d, w) = (coh_degree(p, n, &e.root).unwrap(), coh_weight(p, &e.root).unwrap());
                let Ok(s) = calc.suspend_coh(&e) else { continue };
                check_coh_terms(p, s.n, &s.root, d - 1, w).unwrap();
            }
            1 => {
                let d = rng.gen_range(1..=8);
                let leaf = |name: &str| CohExpr::leaf(FormalClass::cohomology(name, d, 1));
                let rs = feasible_indices(p, d, n);
                let r = rs[rng.gen_range(0..rs.len())];
                let terms = [(rng.gen_range(1..3), leaf("u")), (rng.gen_range(1..3), leaf("v"))];
                let e = calc.q_linearity_expand(r, &terms).unwrap();
                check_coh_terms(p, n, &e, 3 * d + r as i64, 3).unwrap();
            }
            2 => {
                let d = rng.gen_range(0..=8);
                let x = FormalClass::cohomology("x", d, 1);
                let rs = feasible_indices(p, d, n);
                let (r, s) = (rs[rng.gen_range(0..rs.len())], rng.gen_range(0..=4));
                let e = calc.nishida_expand_coh(s, r, &x, None).unwrap();
                check_coh_terms(p, n, &e.expr, 3 * d + r as i64 + 4 * s as i64, 3).unwrap();
            }
            _ => {
                let h = random_hom(&mut rng, p, n, 2);
                let Ok(canon) = calc.canonical_hom(&h) else { continue };
                if canon.is_zero() {
                    continue;
                }
                let (d, w) = (hom_degree(p, n, &canon).unwrap(), hom_weight(p, &canon).unwrap());
                let Ok(pairs) = calc.diagonal_cartan(&canon, &Coproducts::new()) else { continue };
                for (_, t) in pairs {
                    let dd = hom_degree(p, n, &t.left).unwrap() + hom_degree(p, n, &t.right).unwrap();
                    let ww = hom_weight(p, &t.left).unwrap() + hom_weight(p, &t.right).unwrap();
                    assert_eq!((dd, ww), (d, w), "{h} -> {t}");
                }
            }
        }
        done[kind] += 1;
    }
    done
}

/// Returns the reduced expression.
pub fn delta_reduction_in_the_instability_context() -> String {
    let p = Prime::new(3).unwrap();
    let (l, m, i, n) = (2, 2, 1, 0);
    let k = assumption_threshold(p, l, m, n).unwrap();
    assert_eq!(k, 2);
    let fixture = Fixture::minimal(p, i).unwrap();
    let module = fixture.module.tensor(&make_phi_range(k, k + 2, p).unwrap()).unwrap();
    let class = |j: u32| Coords::from([(module.index_of(&format!("x⊗t^{}", 3u64.pow(k + j))).unwrap(), 1)]);
    let ctx = ModuleContext::new(
        module.clone(),
        vec![("a".into(), class(0)), ("b".into(), class(1)), ("c".into(), class(2))],
    );
    let alg = SteenrodAlgebra::new(p);
    let calc = Calculus::new(&alg, Ambient::new((n + 2 * i + 1) as u32).unwrap());
    let (da, db) = (2 * i + 18, 2 * i + 54);
    let a = FormalClass::cohomology("a", da, 1);
    let b = FormalClass::cohomology("b", db, 1);
    let exp = calc.nishida_expand_coh(18, 0, &a, Some(&ctx)).unwrap();
    let want = calc
        .canonical(&CohExpr::sum([(
            2,
            CohExpr::star(vec![CohExpr::leaf(a.clone()), CohExpr::leaf(b.clone()), CohExpr::leaf(b)]),
        )]))
        .unwrap();
    assert_eq!(exp.expr, want, "{}", exp.expr);
    // without the module every P^j a stays formal
    let free = calc.nishida_expand_coh(18, 0, &a, None).unwrap();
    assert!(free.expr.summands().len() > 1);
    exp.expr.to_string()
}
