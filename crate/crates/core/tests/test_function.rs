use minvec::groups::{build_support, SupportOptions};
use minvec::samples;
use minvec::testfunc::{
    concentration_check, concentration_near_half_depth, convolve_check, depth_report, make_omega,
    volume, ConvolutionMode, ConvolutionOptions,
};
use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};

#[test]
fn depth_three_identities() {
    let d = samples::ramified_depth_three();
    let w = make_omega(build_support(&[d.clone()], SupportOptions::default()).unwrap());
    assert_eq!(w.support().group.size(), 6561);
    let v = volume(w.support()).unwrap();
    assert_eq!(v.index, BigInt::from(48));
    let r = convolve_check(&w, ConvolutionOptions::default()).unwrap();
    assert_eq!(r.mode, ConvolutionMode::Full);
    assert!(r.passed());
    assert_eq!(r.identity_value, v.d_pi);
    let dr = depth_report(&[d], Some(v.d_pi)).unwrap();
    assert_eq!(dr.concentration_exponent, 1);
    assert!(concentration_check(&w, 1, 1 << 26).unwrap().holds());
}

#[test]
fn unramified_depth_two_identities() {
    let d = samples::unramified_depth_two();
    let w = make_omega(build_support(&[d.clone()], SupportOptions::default()).unwrap());
    assert_eq!(w.support().group.size(), 2187);
    let v = volume(w.support()).unwrap();
    assert_eq!(v.index, BigInt::from(144));
    assert!(v.within_band);
    let r = convolve_check(&w, ConvolutionOptions::default()).unwrap();
    assert!(r.passed());
    let dr = depth_report(&[d], None).unwrap();
    assert_eq!(dr.normalised_depth, Ratio::from_integer(2));
    assert!(concentration_near_half_depth(&dr));
    assert!(concentration_check(&w, dr.concentration_exponent, 1 << 26)
        .unwrap()
        .holds());
}

#[test]
fn parabolic_identities() {
    let blocks = samples::parabolic_blocks();
    let opts = SupportOptions {
        sample_pairs: 20_000,
        ..SupportOptions::default()
    };
    let w = make_omega(build_support(&blocks, opts).unwrap());
    let v = volume(w.support()).unwrap();
    assert_eq!(v.index, BigInt::from(2_695_680));
    assert_eq!(v.d_pi, BigRational::new(1.into(), 2_695_680.into()));
    assert!(v.within_band);
    let r = convolve_check(&w, ConvolutionOptions::default()).unwrap();
    assert_eq!(r.mode, ConvolutionMode::Sampled);
    assert!(r.passed(), "{:?}", r.mismatch);
    assert!(r.support_points > 200);
    assert!(r.outside_points > 10_000);
    assert_eq!(r.identity_value, v.d_pi);
    let dr = depth_report(&blocks, Some(v.d_pi)).unwrap();
    assert_eq!(dr.normalised_depth, Ratio::from_integer(1));
    assert_eq!(dr.conductor_exponent, Ratio::from_integer(4));
    assert_eq!(dr.concentration_exponent, 0);
    assert!(concentration_check(&w, 0, 1 << 26).unwrap().holds());
}
