use reclab::distributions::{
    poisson_auto_kmax, poisson_pmf, polya_aeppli_auto_kmax, polya_aeppli_pmf, tv_distance,
};
use reclab::engine::{
    compare_to_target, exact_distribution, run_comparison, simulate_counts_at, Target,
};
use reclab::measures::Measure;
use reclab::recurrence::{rho, RecurrenceSpec};
use reclab::symbolic::{thue_morse, Word};

fn model(json: &str) -> Measure {
    serde_json::from_str(json).unwrap()
}

/// Simulated laws sit within the statistical plus truncation radius of the exact law in at
/// least 95 of 100 seeded repetitions.
#[test]
fn simulation_agrees_with_exact_law_across_seeds() {
    let cases = [
        (Measure::uniform(2).unwrap(), "1", vec![1, 2], 2u64),
        (
            model(r#"{"type":"markov","transition":[[0.7,0.3],[0.4,0.6]]}"#),
            "10",
            vec![1, 2],
            3,
        ),
    ];
    for (m, a, d, horizon) in cases {
        let a = Word::from_digits(a).unwrap();
        let spec = RecurrenceSpec::new(d, 1.0).unwrap();
        let exact = exact_distribution(&m, &a, &spec, horizon).unwrap();
        let within = (0..100u64)
            .filter(|&seed| {
                let emp = simulate_counts_at(&m, &a, &spec, horizon, 100_000, seed).unwrap();
                let rep = compare_to_target(&emp, &exact).unwrap();
                rep.tv <= rep.mc_radius + rep.tv_radius
            })
            .count();
        assert!(
            within >= 95,
            "{m:?}: only {within}/100 repetitions within the radius"
        );
    }
}

/// The observed distance never exceeds the attached theorem bound plus both radii.
#[test]
fn observed_distance_respects_theorem_bounds() {
    let uniform = Measure::uniform(2).unwrap();
    let p06 = model(r#"{"type":"bernoulli","probs":[0.4,0.6]}"#);
    let tm = thue_morse(12).unwrap();
    let cases = [
        (&uniform, tm.clone(), vec![1], Target::Poisson),
        (&uniform, tm.prefix(7).unwrap(), vec![1, 2], Target::Poisson),
        (
            &p06,
            Word::repeat(1, 10).unwrap(),
            vec![1],
            Target::PolyaAeppli,
        ),
        (
            &uniform,
            Word::repeat(1, 8).unwrap(),
            vec![1],
            Target::PolyaAeppli,
        ),
    ];
    for (m, a, d, target) in cases {
        let spec = RecurrenceSpec::new(d, 1.0).unwrap();
        let rep = run_comparison(m, &a, &spec, target, 20_000, 3).unwrap();
        let bound = rep.bound.as_ref().unwrap();
        if let Some(b) = bound.value {
            assert!(
                rep.tv <= b + rep.mc_radius + rep.tv_radius,
                "{a}: tv {} above bound {b}",
                rep.tv
            );
        }
    }
}

/// For the all-ones sequence the compound law fits better than the plain Poisson law.
#[test]
fn periodic_target_prefers_compound_law() {
    let m = Measure::uniform(2).unwrap();
    let a = Word::repeat(1, 12).unwrap();
    let spec = RecurrenceSpec::new(vec![1], 1.0).unwrap();
    let horizon = 4096;
    let emp = simulate_counts_at(&m, &a, &spec, horizon, 20_000, 17).unwrap();
    let floor = emp.max_value() as usize;
    let r = rho(&m, &a, &spec).unwrap().value;
    let pa = polya_aeppli_pmf(1.0, r, polya_aeppli_auto_kmax(1.0, r).unwrap().max(floor)).unwrap();
    let po = poisson_pmf(1.0, poisson_auto_kmax(1.0).unwrap().max(floor)).unwrap();
    let emp_pmf = emp.to_pmf().unwrap();
    let tv_pa = tv_distance(&emp_pmf, &pa).unwrap().value;
    let tv_po = tv_distance(&emp_pmf, &po).unwrap().value;
    assert!(tv_pa <= tv_po, "Pólya–Aeppli {tv_pa} vs Poisson {tv_po}");
}
