fn main() {
    // Haar sampling calls LAPACK's dgeqrf/dorgqr from the system OpenBLAS.
    println!("cargo:rustc-link-lib=dylib=openblas");
}
