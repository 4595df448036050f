//! Writes `fixtures/eval/synthetic_study.json`.

#[path = "../tests/common/synthetic.rs"]
mod synthetic;

fn main() {
    let path = synthetic::dataset_path();
    std::fs::create_dir_all(path.parent().expect("has parent")).expect("fixture dir");
    std::fs::write(&path, synthetic::render()).expect("dataset written");
    println!("{}", path.display());
}
