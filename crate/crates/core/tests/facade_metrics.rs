use facade_pv_core::facade::{calibrate_bias, correct_area, tidy_components, BiasModel, Component, ComponentClass};
use facade_pv_core::geom::compute_scale;
use facade_pv_core::metrics::{area_error, boundary_f, jaccard};
use facade_pv_core::region::{overlay, union_area};
use facade_pv_core::BoundingBox;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const CLASSES: [ComponentClass; 3] = [ComponentClass::Window, ComponentClass::Door, ComponentClass::Other];

fn rect(rng: &mut impl Rng, extent: u32, max_side: u32) -> BoundingBox {
    let x0 = rng.gen_range(0..extent - 1);
    let y0 = rng.gen_range(0..extent - 1);
    let x1 = (x0 + rng.gen_range(1..=max_side)).min(extent);
    let y1 = (y0 + rng.gen_range(1..=max_side)).min(extent);
    BoundingBox::new(x0 as f64, y0 as f64, x1 as f64, y1 as f64).unwrap()
}

fn components(rng: &mut impl Rng) -> Vec<Component> {
    (0..rng.gen_range(0..25)).map(|_| Component::new(CLASSES[rng.gen_range(0..3)], rect(rng, 400, 60))).collect()
}

fn class_union(items: &[Component], class: ComponentClass) -> f64 {
    let boxes: Vec<_> = items.iter().filter(|c| c.class == class).map(|c| c.bbox).collect();
    union_area(&boxes)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn tidy_is_idempotent(seed in any::<u64>(), min_area in 0.0f64..400.0, gap in 0.0f64..15.0) {
        let mut rng = StdRng::seed_from_u64(seed);
        let input = components(&mut rng);
        let once = tidy_components(&input, min_area, gap);
        prop_assert!(once.len() <= input.len());
        prop_assert_eq!(tidy_components(&once, min_area, gap), once);
    }

    #[test]
    fn tidy_area_bookkeeping(seed in any::<u64>(), min_area in 0.0f64..400.0, gap in 0.0f64..15.0) {
        let mut rng = StdRng::seed_from_u64(seed);
        let input = components(&mut rng);
        let merged = tidy_components(&input, 0.0, gap);
        let cleaned = tidy_components(&input, min_area, gap);
        for class in CLASSES {
            // Merging only grows coverage.
            prop_assert!(class_union(&merged, class) >= class_union(&input, class));
            // Removal takes away at most the removed boxes' own area.
            let removed: f64 = merged
                .iter()
                .filter(|c| c.class == class && c.bbox.area() < min_area)
                .map(|c| c.bbox.area())
                .sum();
            prop_assert!(class_union(&cleaned, class) >= class_union(&merged, class) - removed);
            prop_assert!(class_union(&cleaned, class) <= class_union(&merged, class));
        }
    }

    #[test]
    fn bias_round_trip(
        truth in prop::collection::vec(0.5f64..500.0, 1..20),
        bias in -0.5f64..0.9,
    ) {
        let pred: Vec<f64> = truth.iter().map(|t| t * (1.0 - bias)).collect();
        let model = calibrate_bias(&truth, &pred, ComponentClass::Wall).unwrap();
        prop_assert!((model.bias - bias).abs() < 1e-12);
        let exact = BiasModel::new(bias, ComponentClass::Wall, 1).unwrap();
        for (t, p) in truth.iter().zip(&pred) {
            let back = correct_area(*p, &exact).unwrap();
            prop_assert!((back - t).abs() <= t * f64::EPSILON, "{} vs {}", back, t);
        }
    }

    #[test]
    fn jaccard_is_symmetric(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let a: Vec<_> = (0..rng.gen_range(1..8)).map(|_| rect(&mut rng, 100, 50)).collect();
        let b: Vec<_> = (0..rng.gen_range(1..8)).map(|_| rect(&mut rng, 100, 50)).collect();
        prop_assert_eq!(jaccard(&a, &b).unwrap(), jaccard(&b, &a).unwrap());
        let j = jaccard(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&j));
    }

    #[test]
    fn covering_more_truth_never_hurts(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let scale = compute_scale(10.0, 1000.0).unwrap();
        let truth: Vec<_> = (0..rng.gen_range(1..6)).map(|_| rect(&mut rng, 200, 80)).collect();
        let mut pred: Vec<_> = (0..rng.gen_range(0..6)).map(|_| rect(&mut rng, 200, 80)).collect();
        let before = area_error(&truth, &pred, &scale).unwrap().epsilon;
        // A sub-rectangle of a truth box.
        let t = truth[rng.gen_range(0..truth.len())];
        let (tx0, ty0, tx1, ty1) = (t.x_min as u32, t.y_min as u32, t.x_max as u32, t.y_max as u32);
        let x0 = rng.gen_range(tx0..tx1);
        let y0 = rng.gen_range(ty0..ty1);
        let x1 = rng.gen_range(x0 + 1..=tx1);
        let y1 = rng.gen_range(y0 + 1..=ty1);
        pred.push(BoundingBox::new(x0 as f64, y0 as f64, x1 as f64, y1 as f64).unwrap());
        let after = area_error(&truth, &pred, &scale).unwrap().epsilon;
        prop_assert!(after <= before + 1e-12);
    }
}

/// One row of a 2000-pixel canvas as a bitset.
const WORDS: usize = 2000 / 64 + 1;

fn raster(rects: &[BoundingBox]) -> Vec<[u64; WORDS]> {
    let mut rows = vec![[0u64; WORDS]; 2000];
    for r in rects {
        for row in rows.iter_mut().take(r.y_max as usize).skip(r.y_min as usize) {
            for x in r.x_min as usize..r.x_max as usize {
                row[x / 64] |= 1 << (x % 64);
            }
        }
    }
    rows
}

fn count(rows: &[[u64; WORDS]], f: impl Fn(u64, u64) -> u64, other: &[[u64; WORDS]]) -> f64 {
    rows.iter()
        .zip(other)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| f(*x, *y).count_ones() as u64).sum::<u64>())
        .sum::<u64>() as f64
}

#[test]
fn sweep_areas_match_pixel_counts() {
    let mut rng = StdRng::seed_from_u64(4242);
    for k in 0..200 {
        let a: Vec<_> = (0..rng.gen_range(1..10)).map(|_| rect(&mut rng, 2000, 900)).collect();
        let b: Vec<_> = (0..rng.gen_range(1..10)).map(|_| rect(&mut rng, 2000, 900)).collect();
        let (ra, rb) = (raster(&a), raster(&b));
        let o = overlay(&a, &b);
        let a_only = count(&ra, |x, y| x & !y, &rb);
        let b_only = count(&ra, |x, y| y & !x, &rb);
        let both = count(&ra, |x, y| x & y, &rb);
        for (sweep, grid) in [(o.a_only, a_only), (o.b_only, b_only), (o.both, both)] {
            assert!((sweep - grid).abs() <= 1.0, "instance {k}: {sweep} vs {grid}");
        }
        let scale = compute_scale(1.0, 1.0).unwrap();
        let e = area_error(&a, &b, &scale).unwrap();
        assert!((e.epsilon - (a_only + b_only) / (a_only + both)).abs() < 1e-12);
    }
}

#[test]
fn boundary_f_on_shifted_and_distant_squares() {
    let sq = BoundingBox::new(10.0, 10.0, 40.0, 40.0).unwrap();
    assert_eq!(boundary_f(&[sq], &[sq], 2.0).unwrap(), 1.0);
    assert_eq!(boundary_f(&[sq], &[sq.translate(1.0, 0.0)], 2.0).unwrap(), 1.0);
    assert_eq!(boundary_f(&[sq], &[sq.translate(200.0, 0.0)], 2.0).unwrap(), 0.0);
    let partial = boundary_f(&[sq], &[sq.translate(5.0, 0.0)], 2.0).unwrap();
    assert!(partial > 0.0 && partial < 1.0);
}
