use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use papageno::annotate::taxonomy::Level;
use papageno::models::{Model, ModelFile, SolverParams, SvmConfig, TextClassifier};
use papageno::preprocess::PreprocessConfig;
use papageno_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(papageno_last_error()) }.to_string_lossy().into_owned()
}

fn toy_model() -> ModelFile {
    let texts = [
        "call the suicide lifeline now",
        "lifeline hotline call for help",
        "suicide squad movie tonight",
        "movie night squad lol",
    ];
    let labels = ["about_suicide", "about_suicide", "off_topic", "off_topic"];
    let (clf, _) = TextClassifier::train(
        &texts,
        &labels,
        Level::Task2,
        &SvmConfig::default(),
        &PreprocessConfig::default(),
        &SolverParams::default(),
    )
    .unwrap();
    ModelFile::new(Model::Svm(Box::new(clf)))
}

#[test]
fn model_handle_roundtrip() {
    let json = cstr(&toy_model().to_json().unwrap());
    let mut handle: *mut PapagenoModel = ptr::null_mut();
    assert_eq!(unsafe { papageno_model_from_json(json.as_ptr(), &mut handle) }, PapagenoStatus::Ok);
    assert!(!handle.is_null());

    let mut level = PapagenoLevel::Fine;
    assert_eq!(unsafe { papageno_model_level(handle, &mut level) }, PapagenoStatus::Ok);
    assert_eq!(level, PapagenoLevel::Task2);

    let mut class = u32::MAX;
    let text = cstr("please call the lifeline");
    assert_eq!(unsafe { papageno_model_predict(handle, text.as_ptr(), &mut class) }, PapagenoStatus::Ok);
    let name = unsafe { CStr::from_ptr(papageno_class_name(level, class)) };
    assert_eq!(name.to_str().unwrap(), "about_suicide");

    let docs = [cstr("lifeline call"), cstr("squad movie lol")];
    let ptrs: Vec<_> = docs.iter().map(|d| d.as_ptr()).collect();
    let mut out = [u32::MAX; 2];
    assert_eq!(unsafe { papageno_model_predict_batch(handle, ptrs.as_ptr(), 2, out.as_mut_ptr()) }, PapagenoStatus::Ok);
    assert_eq!(out, [0, 1]);

    unsafe { papageno_model_free(handle) };
    unsafe { papageno_model_free(ptr::null_mut()) };
}

#[test]
fn errors_set_status_and_message() {
    let mut handle: *mut PapagenoModel = ptr::null_mut();
    let path = cstr("/definitely/missing/model.json");
    assert_eq!(unsafe { papageno_model_load(path.as_ptr(), &mut handle) }, PapagenoStatus::Io);
    assert!(handle.is_null());
    assert!(last_error().contains("missing"));

    let junk = cstr("{not json");
    assert_eq!(unsafe { papageno_model_from_json(junk.as_ptr(), &mut handle) }, PapagenoStatus::Parse);
    assert_eq!(unsafe { papageno_model_from_json(ptr::null(), &mut handle) }, PapagenoStatus::NullPointer);

    let bad_utf8 = [0xffu8, 0xfe, 0];
    let mut class = 0;
    let model = cstr(&toy_model().to_json().unwrap());
    assert_eq!(unsafe { papageno_model_from_json(model.as_ptr(), &mut handle) }, PapagenoStatus::Ok);
    assert_eq!(last_error(), "");
    assert_eq!(
        unsafe { papageno_model_predict(handle, bad_utf8.as_ptr().cast(), &mut class) },
        PapagenoStatus::InvalidUtf8
    );
    unsafe { papageno_model_free(handle) };

    let (mut lo, mut hi) = (0.0, 0.0);
    assert_eq!(unsafe { papageno_clopper_pearson(3, 2, 0.95, &mut lo, &mut hi) }, PapagenoStatus::InvalidInput);
}

#[test]
fn statistics() {
    let (mut lo, mut hi) = (f64::NAN, f64::NAN);
    assert_eq!(unsafe { papageno_clopper_pearson(0, 10, 0.95, &mut lo, &mut hi) }, PapagenoStatus::Ok);
    assert_eq!(lo, 0.0);
    assert!((hi - 0.3085).abs() < 1e-4);

    let mut a = Vec::new();
    let mut b = Vec::new();
    for (x, y, n) in [(1, 1, 20), (1, 0, 5), (0, 1, 10), (0, 0, 15)] {
        a.extend(std::iter::repeat_n(x, n));
        b.extend(std::iter::repeat_n(y, n));
    }
    let (mut k, mut clo, mut chi) = (0.0, 0.0, 0.0);
    assert_eq!(
        unsafe { papageno_cohens_kappa(a.as_ptr(), b.as_ptr(), a.len(), &mut k, &mut clo, &mut chi) },
        PapagenoStatus::Ok
    );
    assert!((k - 0.4).abs() < 1e-9);
    assert!(clo < k && k < chi);
}

#[test]
fn normalize_sizes_buffer() {
    let text = cstr("RT @Someone: Visit https://example.org NOW");
    let mut need = 0usize;
    assert_eq!(unsafe { papageno_normalize(text.as_ptr(), ptr::null_mut(), 0, &mut need) }, PapagenoStatus::BufferTooSmall);
    let mut buf = vec![0 as std::ffi::c_char; need];
    assert_eq!(unsafe { papageno_normalize(text.as_ptr(), buf.as_mut_ptr(), need, &mut need) }, PapagenoStatus::Ok);
    let out = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap();
    assert_eq!(out, "rt @user: visit http now");
}

fn dims(m: PapagenoMessageType, p: PapagenoPerspective, who: PapagenoPerson) -> PapagenoDimensions {
    PapagenoDimensions { message_type: m, perspective: p, person: who, serious: true, focus_on_bereaved: false, mentions_case: false }
}

fn fine_name(i: u32) -> &'static str {
    unsafe { CStr::from_ptr(papageno_class_name(PapagenoLevel::Fine, i)) }.to_str().unwrap()
}

#[test]
fn derive_and_coarsen() {
    let mut cat = u32::MAX;
    let mut flag = true;
    let d = PapagenoDimensions {
        mentions_case: true,
        ..dims(PapagenoMessageType::CallForAction, PapagenoPerspective::SolutionCoping, PapagenoPerson::NotApplicable)
    };
    assert_eq!(unsafe { papageno_derive_category(&d, &mut cat, &mut flag) }, PapagenoStatus::Ok);
    assert_eq!(fine_name(cat), "suicide_cases");
    assert!(!flag);

    let d = PapagenoDimensions {
        focus_on_bereaved: true,
        ..dims(PapagenoMessageType::PersonalExperience, PapagenoPerspective::ProblemSuffering, PapagenoPerson::First)
    };
    assert_eq!(unsafe { papageno_derive_category(&d, &mut cat, &mut flag) }, PapagenoStatus::Ok);
    assert_eq!(fine_name(cat), "bereaved_negative");
    assert!(flag);

    let d = dims(PapagenoMessageType::PersonalExperience, PapagenoPerspective::Neither, PapagenoPerson::First);
    assert_eq!(unsafe { papageno_derive_category(&d, &mut cat, ptr::null_mut()) }, PapagenoStatus::Validation);

    let mut coarse = u32::MAX;
    assert_eq!(unsafe { papageno_coarsen(cat_index("off_topic"), PapagenoLevel::Task1, &mut coarse) }, PapagenoStatus::Ok);
    assert_eq!(coarse, 5);
    assert_eq!(unsafe { papageno_coarsen(cat_index("off_topic"), PapagenoLevel::Task2, &mut coarse) }, PapagenoStatus::Ok);
    assert_eq!(coarse, 1);
    assert_eq!(unsafe { papageno_coarsen(40, PapagenoLevel::Task2, &mut coarse) }, PapagenoStatus::InvalidInput);

    assert_eq!(papageno_class_count(PapagenoLevel::Fine), 12);
    assert!(papageno_class_name(PapagenoLevel::Task2, 2).is_null());
}

fn cat_index(name: &str) -> u32 {
    (0..12).find(|&i| fine_name(i) == name).unwrap()
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/papageno.h")).unwrap();
    for f in [
        "papageno_last_error", "papageno_model_load", "papageno_model_from_json", "papageno_model_free",
        "papageno_model_level", "papageno_model_predict", "papageno_model_predict_batch", "papageno_class_count",
        "papageno_class_name", "papageno_normalize", "papageno_clopper_pearson", "papageno_cohens_kappa",
        "papageno_derive_category", "papageno_coarsen",
    ] {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(header.contains("typedef struct PapagenoModel PapagenoModel;"));
}

/// Directory holding the static library built alongside this test binary.
fn artifact_dir() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let dir = exe.parent()?.parent()?.to_path_buf();
    dir.join("libpapageno_ffi.a").exists().then_some(dir)
}

#[test]
fn c_program_links_against_static_library() {
    let Some(lib_dir) = artifact_dir() else {
        eprintln!("static library not found next to the test binary; skipping C link check");
        return;
    };
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping C link check");
        return;
    }
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let tmp = tempfile::tempdir().unwrap();
    let exe = tmp.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c11")
        .arg("-Wall")
        .arg("-Werror")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(lib_dir.join("libpapageno_ffi.a"))
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");

    let model_path = tmp.path().join("model.json");
    toy_model().save(&model_path).unwrap();
    let out = Command::new(&exe).arg(&model_path).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "about_suicide");
}
