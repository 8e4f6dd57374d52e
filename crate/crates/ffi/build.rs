use std::path::PathBuf;

fn main() {
    let dir = PathBuf::from(std::env::var("CARGO_MANIFEST_DIR").expect("set by cargo"));
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    let config = cbindgen::Config::from_file(dir.join("cbindgen.toml")).expect("valid cbindgen.toml");
    match cbindgen::Builder::new().with_crate(&dir).with_config(config).generate() {
        // only rewritten when the contents change
        Ok(bindings) => {
            bindings.write_to_file(dir.join("include").join("stablekm.h"));
        }
        Err(e) => println!("cargo:warning=header not regenerated: {e}"),
    }
}
