#![no_main]

use libfuzzer_sys::fuzz_target;
use mmap_solver::sparse::mtx::{read_csr, read_matrix_market};

fuzz_target!(|data: &[u8]| {
    // Any input must come back as Ok or Err, never a panic.
    let _ = read_matrix_market(data);
    let _ = read_csr(data);
});
