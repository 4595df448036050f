//! Regenerates `fixtures/preeti/` from `fixtures/preeti-source/`.
//!
//! ```text
//! cargo run --example record_preeti
//! ```

#[path = "../tests/common/preeti.rs"]
mod preeti;

use std::fs;

fn main() {
    let dir = preeti::fixture_dir();
    if dir.exists() {
        for entry in fs::read_dir(&dir).expect("fixture dir is readable") {
            let path = entry.expect("dir entry").path();
            if path.extension().is_some_and(|e| e == "json") {
                fs::remove_file(&path).expect("stale fixture removable");
            }
        }
    }
    fs::create_dir_all(&dir).expect("fixture dir");
    fs::write(dir.join("prompt.txt"), preeti::prompt_text() + "\n").expect("prompt written");
    let out = std::env::temp_dir().join(format!("storyforge-record-{}", std::process::id()));
    let run = preeti::record(&dir, &out);
    let n = fs::read_dir(&dir).map(|d| d.count()).unwrap_or(0);
    println!("recorded {} files into {}", n, dir.display());
    println!("bundle written to {}", run.dir.display());
    let _ = fs::remove_dir_all(&out);
}
