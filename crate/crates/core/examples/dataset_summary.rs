//! Summarizes a directory of YOLO-style label files. Pass a directory, or
//! run without arguments to summarize a small generated dataset.

use std::path::PathBuf;

use agrobot::detection::summarize_dir;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let generated;
    let dir = match std::env::args_os().nth(1) {
        Some(d) => PathBuf::from(d),
        None => {
            generated = tempfile::tempdir()?;
            std::fs::write(generated.path().join("obj.names"), "apple\nbanana\norange\nseed\n")?;
            let images = ["0 0.5 0.5 0.1 0.1\n2 0.2 0.3 0.1 0.1\n", "1 0.7 0.7 0.2 0.1\n", "3 0.1 0.1 0.05 0.05\n2 0.4 0.4 0.1 0.1\n2 0.6 0.4 0.1 0.1\n"];
            for (i, text) in images.iter().enumerate() {
                std::fs::write(generated.path().join(format!("img_{i}.txt")), text)?;
            }
            generated.path().to_path_buf()
        }
    };
    let summary = summarize_dir(&dir)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    println!("{} objects over {} images", summary.total_objects(), summary.images);
    Ok(())
}
