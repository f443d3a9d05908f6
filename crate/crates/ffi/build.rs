use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").unwrap());
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");

    let config = cbindgen::Config::from_file(crate_dir.join("cbindgen.toml")).expect("cbindgen.toml is valid");
    match cbindgen::Builder::new().with_crate(&crate_dir).with_config(config).generate() {
        // only rewrites the file when the contents change
        Ok(bindings) => {
            bindings.write_to_file(crate_dir.join("include/evlcp.h"));
        }
        Err(e) => println!("cargo:warning=header not regenerated: {e}"),
    }
}
