use otcap::channels::{bsec_from_extension, GecModel};
use otcap::protocol::{
    run_protocol, simulate, toeplitz_hash, trial_rng, BitString, ListCap, Margins, OtParams,
    PrivacyHash, Step2Sampler, ToeplitzHash,
};
use proptest::prelude::*;

fn params(seed: u64, trials: u64) -> OtParams {
    OtParams {
        n: 800,
        margins: Margins::uniform(0.03),
        list_cap: ListCap::Weight(4),
        seed,
        trials,
    }
}

fn block(t: &otcap::protocol::Transcript, idx: &[usize]) -> BitString {
    let bits: Vec<bool> = idx.iter().map(|&i| t.x[i] == 1).collect();
    BitString::from_bools(&bits)
}

#[test]
fn transcripts_satisfy_the_structural_invariants() {
    let ch = bsec_from_extension(0.1).unwrap();
    let sampler = Step2Sampler::new(ch.erasure_probability()).unwrap();
    let p = params(21, 0);
    for i in 0..60 {
        let t = run_protocol(&p, &ch, &sampler, &mut trial_rng(21, i)).unwrap();
        if t.aborted {
            continue;
        }
        let m = t.i0.len();
        let g = ToeplitzHash::new(t.g_seed.clone(), m, t.c[0].len()).unwrap();
        let f = PrivacyHash::new(t.f_seed.clone(), m, t.k[0].len()).unwrap();
        for (j, idx) in [&t.i0, &t.i1].into_iter().enumerate() {
            let x = block(&t, idx);
            // one-time pad round trip
            assert_eq!(t.pi2[j].xor(&f.apply(&x).unwrap()), t.k[j]);
            // the true block always passes the hash check
            assert_eq!(g.apply(&x).unwrap(), t.c[j]);
        }
        let ib = if t.b { &t.i1 } else { &t.i0 };
        assert!(ib.iter().all(|&i| t.v[i] == 0));
        let inb = if t.b { &t.i0 } else { &t.i1 };
        assert!(inb.iter().all(|&i| t.v[i] == 1));
        if let Some(k) = &t.k_hat {
            // a wrong estimate can only come from a hash collision
            if k != &t.k[t.b as usize] {
                assert!(t.decode_rank.unwrap() > 1);
            }
        }
    }
}

#[test]
fn simulation_is_deterministic_and_order_free() {
    let ch = bsec_from_extension(0.1).unwrap();
    let a = simulate(&params(5, 25), &ch).unwrap();
    let b = simulate(&params(5, 25), &ch).unwrap();
    assert_eq!(a, b);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());

    // trial i depends on (seed, i) only
    let sampler = Step2Sampler::new(ch.erasure_probability()).unwrap();
    let p = params(5, 0);
    let fwd: Vec<_> = (0..8).map(|i| run_protocol(&p, &ch, &sampler, &mut trial_rng(5, i)).unwrap()).collect();
    for i in (0..8).rev() {
        let t = run_protocol(&p, &ch, &sampler, &mut trial_rng(5, i)).unwrap();
        assert_eq!(t.k, fwd[i as usize].k);
        assert_eq!(t.x, fwd[i as usize].x);
    }
}

#[test]
fn aborts_are_excluded_from_error_denominator() {
    let ch = bsec_from_extension(0.1).unwrap();
    let r = simulate(&params(9, 30), &ch).unwrap();
    let ok = r.trials - r.aborts;
    assert_eq!(r.key_error_rate, if ok == 0 { 0.0 } else { r.key_errors as f64 / ok as f64 });
    assert!(r.key_error_ci[0] <= r.key_error_rate && r.key_error_rate <= r.key_error_ci[1]);
}

fn bits(len: usize) -> impl Strategy<Value = BitString> {
    proptest::collection::vec(any::<bool>(), len).prop_map(|v| BitString::from_bools(&v))
}

proptest! {
    #[test]
    fn toeplitz_is_linear(seed in bits(40), a in bits(25), b in bits(25)) {
        let ha = toeplitz_hash(&seed, &a, 16).unwrap();
        let hb = toeplitz_hash(&seed, &b, 16).unwrap();
        prop_assert_eq!(toeplitz_hash(&seed, &a.xor(&b), 16).unwrap(), ha.xor(&hb));
    }

    #[test]
    fn privacy_hash_keeps_the_prefix(seed in bits(29), x in bits(30)) {
        let f = PrivacyHash::new(seed, 30, 12).unwrap();
        let y = f.apply(&x).unwrap();
        prop_assert_eq!(y.len(), 12);
        let mut zero_tail = x.window(0, 12);
        zero_tail = zero_tail.concat(&BitString::zeros(18));
        prop_assert_eq!(f.apply(&zero_tail).unwrap(), x.window(0, 12));
    }

    #[test]
    fn bit_round_trip(v in any::<u64>(), len in 1usize..=64) {
        let masked = if len == 64 { v } else { v & ((1u64 << len) - 1) };
        let b = BitString::from_u64(masked, len);
        prop_assert_eq!(b.read_bits(0, len), masked);
        prop_assert_eq!(b.count_ones(), masked.count_ones() as usize);
    }
}
