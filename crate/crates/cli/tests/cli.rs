use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use foodaug_core::corpus::{toy_corpus, write_corpus, Category, Field, TableFormat, TOY_SYNONYMS};
use foodaug_core::evaluate::GroupedConfusion;
use foodaug_core::experiment::{CategoryScore, RunSummary, SeedScores};
use foodaug_core::models::Family;

fn foodaug(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_foodaug"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn setup(dir: &Path, augmentation: &str) -> String {
    write_corpus(dir.join("train.csv"), &toy_corpus(150, 0, 4), TableFormat::Comma).unwrap();
    write_corpus(dir.join("dev.csv"), &toy_corpus(40, 500, 5), TableFormat::Comma).unwrap();
    write_corpus(dir.join("test.csv"), &toy_corpus(50, 900, 6), TableFormat::Comma).unwrap();
    fs::write(dir.join("syn.txt"), TOY_SYNONYMS).unwrap();
    let manifest = format!(
        r#"{{
  "name": "nb-text",
  "corpus": {{"train": "train.csv", "dev": "dev.csv", "test": "test.csv"}},
  "field": "text",
  {augmentation}
  "classifier": {{"family": "multinomial-nb", "alpha": 0.1}},
  "seeds": [2024, 2025],
  "output_dir": "runs/nb"
}}"#
    );
    let path = dir.join("manifest.json");
    fs::write(&path, manifest).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn clean_command() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("raw.csv");
    fs::write(
        &input,
        "title,text,hazard-category,product-category,hazard,product\n\
         \"<b>Beer</b>&amp; recall\",\"glass\tparticles//found\",foreign bodies,beverages,glass,beer\n",
    )
    .unwrap();
    let output = tmp.path().join("clean.tsv");
    let o = foodaug(&["clean", "--input", input.to_str().unwrap(), "--output", output.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&output).unwrap();
    assert!(text.contains("Beer recall\tglass particles found"), "{text}");
}

#[test]
fn train_predict_score_tune() {
    let tmp = tempfile::tempdir().unwrap();
    let m = setup(tmp.path(), "");
    let o = foodaug(&["train", "--manifest", &m]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = foodaug(&["predict", "--manifest", &m]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("ST1: "));
    let run = tmp.path().join("runs/nb");
    assert!(run.join("manifest.json").exists());
    assert!(run.join("scores.json").exists());

    let preds = run.join("seed-2024/predictions-fine.csv");
    let out = tmp.path().join("score.json");
    let o = foodaug(&[
        "score",
        "--predictions",
        preds.to_str().unwrap(),
        "--gold",
        tmp.path().join("test.csv").to_str().unwrap(),
        "--level",
        "fine",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let combined = report["combined"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&combined));

    let o = foodaug(&[
        "tune", "--manifest", &m, "--n-trials", "2", "--sampler", "adaptive", "--category", "hazard-category",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("hazard-category: best trial"));
    assert!(run.join("tune/hazard-category.json").exists());

    let o = foodaug(&["tune", "--manifest", &m, "--n-trials", "3", "--external-model", "distilbert"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(run.join("external/distilbert/trial-2.json").exists());
}

#[test]
fn score_of_gold_is_one() {
    let tmp = tempfile::tempdir().unwrap();
    let gold = toy_corpus(30, 0, 9);
    write_corpus(tmp.path().join("gold.csv"), &gold, TableFormat::Comma).unwrap();
    let mut preds = String::from("id,hazard_pred,product_pred\n");
    for r in &gold {
        preds.push_str(&format!("{},{},\"{}\"\n", r.id, r.hazard_category, r.product_category));
    }
    fs::write(tmp.path().join("preds.csv"), preds).unwrap();
    let o = foodaug(&[
        "score",
        "--predictions",
        tmp.path().join("preds.csv").to_str().unwrap(),
        "--gold",
        tmp.path().join("gold.csv").to_str().unwrap(),
        "--level",
        "coarse",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("combined"), "{}", stdout(&o));
    assert!(stdout(&o).contains("1.0000"), "{}", stdout(&o));
}

#[test]
fn augment_technique_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let m = setup(
        tmp.path(),
        r#""augmentation": {"technique": "SR", "synonyms": "syn.txt", "overrides": {"hazard": {"threshold": 10, "budget": 4}}},"#,
    );
    let o = foodaug(&["augment", "--manifest", &m, "--category", "hazard"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("after"));
    let plan = tmp.path().join("runs/nb/augment/hazard/plan.json");
    assert!(plan.exists());

    let o = foodaug(&["augment", "--manifest", &m, "--technique", "none"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("augment:"), "{}", stderr(&o));

    let o = foodaug(&["augment", "--manifest", &m, "--technique", "XX"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_manifest_names_stage() {
    let o = foodaug(&["train", "--manifest", "/nonexistent/m.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("load manifest"), "{}", stderr(&o));
}

fn fake_run(dir: &Path, name: &str, score: f64, jitter: f64) {
    let seeds = (0..3)
        .map(|i| SeedScores {
            seed: 2024 + i,
            split: "test".into(),
            n_samples: 10,
            categories: [(
                Category::Hazard,
                CategoryScore {
                    f1_macro: score + jitter * i as f64,
                    grouped: GroupedConfusion {
                        minority_classes: ["m".to_string()].into_iter().collect(),
                        minority_correct: 1,
                        minority_total: 2,
                        majority_correct: 7,
                        majority_total: 8,
                    },
                },
            )]
            .into_iter()
            .collect(),
            st1: None,
            st2: None,
        })
        .collect();
    let summary = RunSummary {
        name: name.into(),
        family: Family::LinearSvm,
        field: Field::Text,
        technique: "none".into(),
        seeds,
        mean: BTreeMap::from([("hazard".to_string(), score)]),
    };
    fs::create_dir_all(dir).unwrap();
    fs::write(dir.join("scores.json"), serde_json::to_string(&summary).unwrap()).unwrap();
}

#[test]
fn compare_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    fake_run(&a, "baseline", 0.5, 0.01);
    fake_run(&b, "sr", 0.6, 0.01);
    let out = tmp.path().join("cmp.json");
    let o = foodaug(&[
        "compare",
        "--baseline",
        a.to_str().unwrap(),
        "--variants",
        b.to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let p = v["rows"][0]["cells"]["hazard"]["p"].as_f64().unwrap();
    assert!((p - 0.0495).abs() < 1e-3, "{p}");

    // identical scores within each group are ties; the tie correction gives H = 5
    let (c, d) = (tmp.path().join("c"), tmp.path().join("d"));
    fake_run(&c, "flat-baseline", 0.5, 0.0);
    fake_run(&d, "flat-sr", 0.6, 0.0);
    let o = foodaug(&["compare", "--baseline", c.to_str().unwrap(), "--variants", d.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("0.0253"), "{}", stdout(&o));

    let o = foodaug(&["report", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = stdout(&o);
    assert!(table.contains("baseline") && table.contains("sr"));
    assert!(table.contains("3/6"), "{table}");
}
