//! Fixture systems shared by the integration tests.
#![allow(dead_code)]

use selinf_core::{Design, InputSpec, JointPmf, OutputSpec, OutputValue, System, TransformSpec};

pub fn two_by_two_inputs() -> Vec<InputSpec> {
    vec![InputSpec::new("l1", ["1", "2"]), InputSpec::new("l2", ["1", "2"])]
}

pub fn binary_design() -> Design {
    Design::fully_crossed(
        two_by_two_inputs(),
        vec![OutputSpec::labelled("A1", ["1", "2"]), OutputSpec::labelled("A2", ["1", "2"])],
    )
}

/// Tables in treatment order (1,1), (1,2), (2,1), (2,2), each row-major in (A1, A2).
pub fn binary_system(tables: [[f64; 4]; 4]) -> System {
    System::from_tables(binary_design(), tables.iter().map(|t| t.to_vec()).collect()).unwrap()
}

pub fn jdc_system() -> System {
    binary_system([
        [0.140, 0.360, 0.360, 0.140],
        [0.198, 0.302, 0.302, 0.198],
        [0.189, 0.311, 0.311, 0.189],
        [0.460, 0.040, 0.040, 0.460],
    ])
}

/// A known witness for the example, in column order `h11 h12 h21 h22`.
pub const JDC_REFERENCE_Q: [f64; 16] = [
    0.067, 0.0, 0.131, 0.04, 0.0, 0.073, 0.0, 0.189, 0.122, 0.0, 0.14, 0.0, 0.04, 0.198, 0.0, 0.0,
];

pub fn pr_box() -> System {
    binary_system([
        [0.5, 0.0, 0.0, 0.5],
        [0.5, 0.0, 0.0, 0.5],
        [0.5, 0.0, 0.0, 0.5],
        [0.0, 0.5, 0.5, 0.0],
    ])
}

pub fn marginal_violation() -> System {
    binary_system([
        [0.2, 0.2, 0.3, 0.3],
        [0.3, 0.1, 0.2, 0.4],
        [0.4, 0.3, 0.1, 0.2],
        [0.3, 0.4, 0.1, 0.2],
    ])
}

pub fn transform_example() -> System {
    binary_system([
        [0.3, 0.4, 0.1, 0.2],
        [0.35, 0.35, 0.15, 0.15],
        [0.32, 0.48, 0.08, 0.12],
        [0.45, 0.35, 0.05, 0.15],
    ])
}

/// `g1(1): 1->+1, 2->-1`, `g1(2): 1->-1, 2->+1`, `g2(1): 1->7, 2->3`,
/// `g2(2): 1->3, 2->7`; targets ordered `+1, -1` and `7, 3`.
pub fn transform_example_spec() -> TransformSpec {
    TransformSpec::new(
        "sign-and-scale",
        vec![
            OutputSpec::new("B1", vec![OutputValue::labelled("+1"), OutputValue::labelled("-1")]),
            OutputSpec::numeric("B2", &[7.0, 3.0]),
        ],
        vec![vec![vec![0, 1], vec![1, 0]], vec![vec![0, 1], vec![1, 0]]],
    )
}

pub const TRANSFORMED_P: [f64; 16] = [
    0.3, 0.4, 0.1, 0.2, 0.35, 0.35, 0.15, 0.15, 0.08, 0.12, 0.32, 0.48, 0.15, 0.05, 0.35, 0.45,
];

pub const TRANSFORMED_REFERENCE_Q: [f64; 16] = [
    0.03, 0.0, 0.0, 0.0, 0.0, 0.27, 0.32, 0.08, 0.0, 0.05, 0.12, 0.0, 0.0, 0.05, 0.03, 0.05,
];

const BAND: [f64; 9] = [0.24, 0.07, 0.0, 0.07, 0.24, 0.07, 0.0, 0.07, 0.24];
const FLIPPED: [f64; 9] = [0.0, 0.07, 0.24, 0.07, 0.24, 0.07, 0.24, 0.07, 0.0];

fn three_valued(a1: &[f64], a2: &[f64]) -> System {
    let design = Design::fully_crossed(
        two_by_two_inputs(),
        vec![OutputSpec::numeric("A1", a1), OutputSpec::numeric("A2", a2)],
    );
    System::from_tables(design, vec![BAND.to_vec(), BAND.to_vec(), BAND.to_vec(), FLIPPED.to_vec()]).unwrap()
}

/// Outputs valued 0, 2, 4 and 0, 1, 2.
pub fn distance_example() -> System {
    three_valued(&[0.0, 2.0, 4.0], &[0.0, 1.0, 2.0])
}

/// `A1: 0->2, 2->1, 4->1`, `A2: 0->2, 1->1, 2->1` at every level, targets ordered 1, 2.
pub fn distance_grouping(design: &Design) -> TransformSpec {
    TransformSpec::level_independent(
        "grouping",
        design,
        vec![OutputSpec::numeric("B1", &[1.0, 2.0]), OutputSpec::numeric("B2", &[1.0, 2.0])],
        vec![vec![1, 0, 0], vec![1, 0, 0]],
    )
}

/// The same tables with both outputs valued 0, 1, 5.
pub fn cosphericity_example() -> System {
    three_valued(&[0.0, 1.0, 5.0], &[0.0, 1.0, 5.0])
}

/// Relabels the value 5 as 2 in both outputs.
pub fn cosphericity_relabel(design: &Design) -> TransformSpec {
    TransformSpec::level_independent(
        "five-to-two",
        design,
        vec![OutputSpec::numeric("B1", &[0.0, 1.0, 2.0]), OutputSpec::numeric("B2", &[0.0, 1.0, 2.0])],
        vec![vec![0, 1, 2], vec![0, 1, 2]],
    )
}

/// The 16x16 matrix for the 2x2 binary design, rows (1,1)..(2,2) x tuples 11, 12, 21, 22.
pub const GOLDEN_M: [&str; 16] = [
    "1100110000000000",
    "0011001100000000",
    "0000000011001100",
    "0000000000110011",
    "1010101000000000",
    "0101010100000000",
    "0000000010101010",
    "0000000001010101",
    "1100000011000000",
    "0011000000110000",
    "0000110000001100",
    "0000001100000011",
    "1010000010100000",
    "0101000001010000",
    "0000101000001010",
    "0000010100000101",
];

pub fn three_variable_pmf() -> JointPmf {
    JointPmf::new(
        vec![2, 2, 2],
        vec![1.0 / 16.0, 0.0, 7.0 / 16.0, 0.0, 3.0 / 16.0, 0.0, 5.0 / 16.0, 0.0],
    )
    .unwrap()
}

pub mod random {
    use rand::Rng;
    use selinf_core::{Design, InputSpec, JointPmf, LatentModel, OutputSpec, Treatment};

    pub fn weights<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    }

    /// Random design with up to `max_n` inputs, `max_m` levels, `max_v`
    /// numeric values, and either all or a random nonempty subset of treatments.
    pub fn design<R: Rng>(rng: &mut R, max_n: usize, max_m: usize, max_v: usize) -> Design {
        let n = rng.gen_range(1..=max_n);
        let inputs: Vec<InputSpec> = (0..n)
            .map(|k| {
                let m = rng.gen_range(1..=max_m);
                InputSpec::new(format!("l{}", k + 1), (1..=m).map(|l| l.to_string()))
            })
            .collect();
        let outputs: Vec<OutputSpec> = (0..n)
            .map(|k| {
                let v = rng.gen_range(1..=max_v);
                let mut x = 0.0;
                let payloads: Vec<f64> = (0..v)
                    .map(|_| {
                        x += rng.gen_range(1..4) as f64;
                        x
                    })
                    .collect();
                OutputSpec::numeric(format!("A{}", k + 1), &payloads)
            })
            .collect();
        let full = Design::fully_crossed(inputs, outputs);
        if rng.gen_bool(0.5) {
            return full;
        }
        let mut treatments: Vec<Treatment> = full.treatments.iter().filter(|_| rng.gen_bool(0.6)).cloned().collect();
        if treatments.is_empty() {
            treatments.push(full.treatments[rng.gen_range(0..full.treatments.len())].clone());
        }
        Design::new(full.inputs, full.outputs, treatments)
    }

    /// Random latent model on `design` with a scalar latent of size `1..=max_r`.
    pub fn latent<R: Rng>(rng: &mut R, design: &Design, max_r: usize) -> LatentModel {
        let r = rng.gen_range(1..=max_r);
        let pmf = JointPmf::new(vec![r], weights(rng, r)).unwrap();
        let responses = design
            .inputs
            .iter()
            .zip(&design.outputs)
            .map(|(i, o)| {
                (0..i.levels.len())
                    .map(|_| (0..r).map(|_| rng.gen_range(0..o.values.len())).collect())
                    .collect()
            })
            .collect();
        LatentModel::new(pmf, responses)
    }

    /// Durations for a two-input, two-level design satisfying prolongation:
    /// integer payloads `0..=max_t`, level 2 never shorter than level 1.
    pub fn prolonged<R: Rng>(rng: &mut R, max_r: usize, max_t: usize) -> (Design, LatentModel) {
        let payloads: Vec<f64> = (0..=max_t).map(|t| t as f64).collect();
        let design = Design::fully_crossed(
            vec![InputSpec::new("l1", ["1", "2"]), InputSpec::new("l2", ["1", "2"])],
            vec![OutputSpec::numeric("T1", &payloads), OutputSpec::numeric("T2", &payloads)],
        );
        let r = rng.gen_range(1..=max_r);
        let pmf = JointPmf::new(vec![r], weights(rng, r)).unwrap();
        let mut responses = vec![vec![vec![0; r]; 2]; 2];
        for table in responses.iter_mut() {
            for cell in 0..r {
                let lo = rng.gen_range(0..=max_t);
                let hi = rng.gen_range(lo..=max_t);
                table[0][cell] = lo;
                table[1][cell] = hi;
            }
        }
        (design, LatentModel::new(pmf, responses))
    }

    /// Uniform integer grid from -1 past every possible jump.
    pub fn covering_grid(max_t: usize) -> Vec<f64> {
        (-1..=(2 * max_t as i64 + 1)).map(|t| t as f64).collect()
    }

    /// A random marginally selective 2x2 binary system: a random latent
    /// system mixed toward a randomly oriented PR-box.
    pub fn fine_instance<R: Rng>(rng: &mut R) -> [[f64; 4]; 4] {
        let design = super::binary_design();
        let model = latent(rng, &design, 6);
        let feasible = selinf_core::generate_system(&design, &model).unwrap();
        // Orientation: the treatment whose table is anti-diagonal, and a flip of A1 values.
        let odd = rng.gen_range(0..4);
        let flip = rng.gen_bool(0.5);
        let w = rng.gen_range(0.0..1.0);
        let mut out = [[0.0; 4]; 4];
        for (t, row) in out.iter_mut().enumerate() {
            let diag = t != odd;
            let box_table: [f64; 4] = if diag ^ flip { [0.5, 0.0, 0.0, 0.5] } else { [0.0, 0.5, 0.5, 0.0] };
            for (c, x) in row.iter_mut().enumerate() {
                *x = (1.0 - w) * feasible.distributions[t].masses()[c] + w * box_table[c];
            }
        }
        out
    }
}
