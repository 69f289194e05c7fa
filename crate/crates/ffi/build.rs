fn main() {
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").unwrap();
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");

    let config = cbindgen::Config::from_root_or_default(&crate_dir);
    match cbindgen::Builder::new().with_crate(&crate_dir).with_config(config).generate() {
        Ok(b) => {
            b.write_to_file(format!("{crate_dir}/include/shapiro.h"));
        }
        // keep the committed header if parsing fails, e.g. on a newer syntax cbindgen doesn't know
        Err(e) => println!("cargo:warning=header not regenerated: {e}"),
    }
}
