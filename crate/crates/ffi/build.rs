fn main() {
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").unwrap();
    match cbindgen::generate(&crate_dir) {
        Ok(bindings) => {
            bindings.write_to_file(format!("{crate_dir}/include/metasim.h"));
        }
        // Keep the committed header when the crate is mid-edit.
        Err(e @ cbindgen::Error::ParseSyntaxError { .. }) => {
            eprintln!("cbindgen parse error, keeping existing header: {e:?}");
        }
        Err(e) => panic!("cbindgen: {e:?}"),
    }
}
