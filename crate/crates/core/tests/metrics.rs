use pcwf_core::metrics::{bd_rate, bpop, psnr, psnr_from_sse, weighted_psnr, RatePoint};
use pcwf_core::rdo::lambda;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn curve(rates: &[f64], psnr: &[f64]) -> Vec<RatePoint> {
    rates.iter().zip(psnr).map(|(&bpop, &psnr)| RatePoint { bpop, psnr }).collect()
}

fn fixture() -> (Vec<RatePoint>, Vec<RatePoint>) {
    (
        curve(&[0.10, 0.20, 0.40, 0.80], &[30.0, 33.5, 36.8, 39.9]),
        curve(&[0.09, 0.17, 0.35, 0.72], &[30.4, 33.9, 37.0, 40.3]),
    )
}

/// With four points the cubic fit interpolates, so Lagrange interpolation
/// integrated by composite Simpson gives the same average.
fn lagrange_simpson_oracle(a: &[RatePoint], b: &[RatePoint]) -> f64 {
    let interp = |c: &[RatePoint], x: f64| -> f64 {
        let mut acc = 0.0;
        for i in 0..c.len() {
            let mut w = c[i].bpop.log10();
            for j in 0..c.len() {
                if i != j {
                    w *= (x - c[j].psnr) / (c[i].psnr - c[j].psnr);
                }
            }
            acc += w;
        }
        acc
    };
    let lo = a[0].psnr.max(b[0].psnr);
    let hi = a[3].psnr.min(b[3].psnr);
    let n = 2000;
    let h = (hi - lo) / n as f64;
    let mut s = 0.0;
    for k in 0..=n {
        let x = lo + k as f64 * h;
        let w = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        s += w * (interp(b, x) - interp(a, x));
    }
    let avg = s * h / 3.0 / (hi - lo);
    (10f64.powf(avg) - 1.0) * 100.0
}

#[test]
fn bd_rate_fixture_matches_golden_and_oracle() {
    let (a, b) = fixture();
    let v = bd_rate(&a, &b).unwrap();
    assert!((v - -18.720205449).abs() < 1e-3, "{v}");
    assert!((v - lagrange_simpson_oracle(&a, &b)).abs() < 1e-6);
}

#[test]
fn bd_rate_identity_and_uniform_scaling() {
    let (a, _) = fixture();
    assert!(bd_rate(&a, &a).unwrap().abs() < 1e-9);
    let half: Vec<RatePoint> = a.iter().map(|p| RatePoint { bpop: p.bpop / 2.0, psnr: p.psnr }).collect();
    assert!((bd_rate(&a, &half).unwrap() + 50.0).abs() < 1e-6);
    let double: Vec<RatePoint> = a.iter().map(|p| RatePoint { bpop: p.bpop * 2.0, psnr: p.psnr }).collect();
    assert!((bd_rate(&a, &double).unwrap() - 100.0).abs() < 1e-6);
}

#[test]
fn bd_rate_errors() {
    let (a, b) = fixture();
    assert!(bd_rate(&a[..3], &b).is_err());
    let far: Vec<RatePoint> = b.iter().map(|p| RatePoint { bpop: p.bpop, psnr: p.psnr + 50.0 }).collect();
    assert!(bd_rate(&a, &far).is_err());
    let mut zero = b.clone();
    zero[0].bpop = 0.0;
    assert!(bd_rate(&a, &zero).is_err());
}

#[test]
fn psnr_goldens_and_naive_oracle() {
    assert!((psnr(&[0; 64], &[1; 64]).unwrap() - 48.1308).abs() < 1e-2);
    assert_eq!(psnr_from_sse(0.0, 10), f64::INFINITY);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let a: Vec<u8> = (0..1000).map(|_| rng.random()).collect();
    let b: Vec<u8> = (0..1000).map(|_| rng.random()).collect();
    let mut sse = 0.0;
    for i in 0..a.len() {
        let d = a[i] as f64 - b[i] as f64;
        sse += d * d;
    }
    let naive = 10.0 * (255.0 * 255.0 / (sse / a.len() as f64)).log10();
    assert!((psnr(&a, &b).unwrap() - naive).abs() < 1e-9);
    assert!(psnr_from_sse(10.0, 100) > psnr_from_sse(11.0, 100));
}

#[test]
fn small_goldens() {
    assert_eq!(lambda(18), 3.4);
    assert_eq!(lambda(12), 0.85);
    assert_eq!(weighted_psnr(33.0, 33.0, 33.0), 33.0);
    assert!((weighted_psnr(45.0, 50.0, 50.0) - 46.11).abs() < 1e-2);
    assert!((weighted_psnr(40.0, 40.0, 49.0) - 41.0).abs() < 1e-12);
    assert_eq!(bpop(1000.0, 250), 4.0);
}
