//! Code construction checked against independent dense oracles.

use proptest::prelude::*;
use rand::Rng;
use reldec::bp::syndrome_ok;
use reldec::code::{
    build_ab_code, intra_cluster_four_cycles, load_alist, make_clusters, write_alist,
    ClusterMethod, LdpcCode, LiftSpec, ParityCheckMatrix, TannerGraph,
};
use reldec::rng;

/// Dense `H` straight from the block definition, without the library.
fn dense_ab(gamma: usize, p: usize) -> Vec<Vec<u8>> {
    let mut h = vec![vec![0u8; p * p]; gamma * p];
    for r in 0..gamma {
        for c in 0..p {
            let s = (r * c) % p;
            for i in 0..p {
                h[r * p + i][c * p + (i + s) % p] = 1;
            }
        }
    }
    h
}

fn dense_rank(mut m: Vec<Vec<u8>>) -> usize {
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..m.len()).find(|&r| m[r][c] == 1) else {
            continue;
        };
        m.swap(rank, p);
        for r in 0..m.len() {
            if r != rank && m[r][c] == 1 {
                let pivot = m[rank].clone();
                for (x, y) in m[r].iter_mut().zip(pivot) {
                    *x ^= y;
                }
            }
        }
        rank += 1;
    }
    rank
}

fn dense_syndrome_zero(h: &[Vec<u8>], x: &[u8]) -> bool {
    h.iter()
        .all(|row| row.iter().zip(x).map(|(a, b)| a & b).sum::<u8>() % 2 == 0)
}

#[test]
fn ab_codes_match_dense_construction() {
    for (gamma, p) in [(3, 5), (3, 7), (4, 7), (5, 11), (3, 13)] {
        let h = build_ab_code(gamma, p).unwrap();
        let dense = dense_ab(gamma, p);
        assert_eq!(h.to_dense(), dense, "AB({gamma},{p})");
        assert_eq!(h.rank_gf2(), dense_rank(dense));
        assert_eq!(h.rank_gf2(), gamma * p - gamma + 1);
    }
}

#[test]
fn syndrome_agrees_with_dense_oracle_on_random_words() {
    let h = build_ab_code(3, 5).unwrap();
    let dense = h.to_dense();
    let mut r = rng::stream(12, &[]);
    let mut rejected = 0;
    for _ in 0..2000 {
        let x: Vec<u8> = (0..25).map(|_| r.random_range(0..2)).collect();
        let expect = dense_syndrome_zero(&dense, &x);
        assert_eq!(syndrome_ok(&x, &h), expect);
        assert_eq!(h.syndrome_ok(&x), expect);
        rejected += usize::from(!expect);
    }
    assert!(rejected > 1900);
    // every codeword of the 12-dimensional code passes; enumerate via brute force on a sub-block
    let mut codewords = 0;
    for mask in 0u32..(1 << 15) {
        let mut x = vec![0u8; 25];
        for (i, b) in x.iter_mut().enumerate().take(15) {
            *b = ((mask >> i) & 1) as u8;
        }
        if dense_syndrome_zero(&dense, &x) {
            codewords += 1;
            assert!(syndrome_ok(&x, &h));
        }
    }
    assert!(codewords >= 1);
}

#[test]
fn bg2_shaped_lift_has_expected_shape_and_weights() {
    // 42 x 52 base with a dual-diagonal-like core and pseudo-random extra entries
    let mut text = String::from("lift_factor 10\nbase 42 52\npunctured 0 1\n");
    let mut r = rng::stream(13, &[]);
    let mut count = 0;
    for row in 0..42usize {
        let mut cols = vec![row % 10, 10 + row];
        if row + 11 < 52 {
            cols.push(row + 11);
        }
        cols.push(r.random_range(0..10));
        cols.sort_unstable();
        cols.dedup();
        for c in cols {
            text.push_str(&format!("{row} {c} {}\n", r.random_range(0..10)));
            count += 1;
        }
    }
    let spec = LiftSpec::parse(&text).unwrap();
    let h = spec.lift().unwrap();
    assert_eq!((h.rows(), h.cols()), (420, 520));
    assert_eq!(h.num_entries(), count * 10);
    let base_rows = spec.base.row_weights();
    for (i, w) in h.row_weights().into_iter().enumerate() {
        assert_eq!(w, base_rows[i / 10]);
    }
    assert_eq!(spec.punctured_vns(), (0..20).collect::<Vec<_>>());
    let rate = spec.transmitted_rate(&h);
    assert!((rate - (520 - h.rank_gf2()) as f64 / 500.0).abs() < 1e-15);
    assert_eq!(LiftSpec::parse(&spec.render()).unwrap(), spec);
}

#[test]
fn alist_files_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let h = build_ab_code(4, 7).unwrap();
    let path = dir.path().join("h.alist");
    std::fs::write(&path, write_alist(&h)).unwrap();
    let back = load_alist(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back, h);
    assert_eq!(back.fingerprint(), h.fingerprint());
}

#[test]
fn cycle_max_clustering_keeps_more_four_cycles_than_sequential() {
    // AB codes have no 4-cycles; a random low-density matrix does
    let mut r = rng::stream(14, &[]);
    let mut entries = Vec::new();
    for row in 0..20 {
        for c in 0..40 {
            if r.random_bool(0.15) || c == row || c == row + 20 {
                entries.push((row, c));
            }
        }
    }
    let h = ParityCheckMatrix::from_entries(20, 40, entries).unwrap();
    let g = TannerGraph::new(&h);
    let seq = make_clusters(&g, 4, ClusterMethod::Sequential).unwrap();
    let cyc = make_clusters(&g, 4, ClusterMethod::CycleMax).unwrap();
    assert_eq!(cyc.num_clusters(), 5);
    assert!(intra_cluster_four_cycles(&g, &cyc) >= intra_cluster_four_cycles(&g, &seq));
}

#[test]
fn state_space_of_ab35_single_cn_clusters() {
    let code = LdpcCode::new(build_ab_code(3, 5).unwrap(), 1, ClusterMethod::Sequential).unwrap();
    assert_eq!(code.clustering().state_space_size(), 15 * 32);
}

proptest! {
    #[test]
    fn clusterings_partition_the_check_nodes(z in 1usize..6, cycle in any::<bool>()) {
        let h = build_ab_code(3, 7).unwrap();
        let g = TannerGraph::new(&h);
        let method = if cycle { ClusterMethod::CycleMax } else { ClusterMethod::Sequential };
        let cl = make_clusters(&g, z, method).unwrap();
        prop_assert_eq!(cl.num_clusters(), 21usize.div_ceil(z));
        let mut all: Vec<usize> = (0..cl.num_clusters()).flat_map(|a| cl.cns(a).to_vec()).collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..21).collect::<Vec<_>>());
        for a in 0..cl.num_clusters() {
            let mut vns: Vec<usize> = cl.cns(a).iter().flat_map(|&c| g.cn_neighbors(c).to_vec()).collect();
            vns.sort_unstable();
            vns.dedup();
            prop_assert_eq!(cl.vns(a), vns.as_slice());
        }
    }
}
