#![no_main]

use libfuzzer_sys::fuzz_target;
use mmap_solver::sparse::mtx::{read_matrix_market, write_matrix_market, write_vector, MtxData};

fuzz_target!(|data: &[u8]| {
    let Ok(parsed) = read_matrix_market(data) else {
        return;
    };
    let mut out = Vec::new();
    match &parsed {
        MtxData::Sparse(m) => write_matrix_market(&mut out, m).unwrap(),
        MtxData::Dense {
            cols: 1, values, ..
        } => write_vector(&mut out, values).unwrap(),
        MtxData::Dense { .. } => return,
    }
    let again = read_matrix_market(out.as_slice()).expect("writer output must parse");
    assert_eq!(parsed, again);
});
