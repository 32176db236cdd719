//! C ABI over the stencilforge core.
//!
//! Objects are opaque handles created by `sf_*_new`/`sf_*_load` functions and
//! released with the matching `sf_*_free`. Every fallible call returns an
//! [`SfStatus`]; on failure, `sf_last_error_message` describes the error for
//! the calling thread. Strings returned through `char **out` are owned by the
//! caller and released with `sf_string_free`; byte buffers with
//! `sf_bytes_free`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use stencilforge::io::document::StencilDocument;
use stencilforge::io::png::encode_png;
use stencilforge::io::shapes::{render_specimen, ShapeLibrary, ShapeMapping};
use stencilforge::io::svg::{export_svg_glyph, export_svg_stencil};
use stencilforge::output::population_document;
use stencilforge::raster::render_expression;
use stencilforge::targets::{builtin_alphabet, load_targets};
use stencilforge::{EvoConfig, Error, Evolution, TargetSet};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidConfig = 3,
    Io = 4,
    Parse = 5,
    MissingSolution = 6,
    OutOfRange = 7,
    Render = 8,
    Internal = 9,
}

/// Target alphabet.
pub struct SfTargets(TargetSet);

/// Evolution run advanced one generation at a time.
pub struct SfRun(Evolution);

/// Stencil document.
pub struct SfDocument(StencilDocument);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(SfStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => SfStatus::Io,
            Error::InvalidConfig(_) | Error::Infeasible(_) | Error::SizeMismatch { .. } => SfStatus::InvalidConfig,
            Error::MissingSolution(_) => SfStatus::MissingSolution,
            Error::IndexOutOfRange { .. } => SfStatus::OutOfRange,
            Error::Bitmap { .. }
            | Error::Targets(_)
            | Error::Document { .. }
            | Error::UnsupportedVersion(_)
            | Error::ShapeLibrary { .. } => SfStatus::Parse,
            Error::MaskLength { .. } | Error::UnknownShape(_) | Error::UnmappedIndex(_) | Error::Png(_) => {
                SfStatus::Render
            }
        };
        Failure(status, e.to_string())
    }
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Runs `f`, records any failure, and turns panics into `Internal`.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SfStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SfStatus::Internal
        }
    }
}

fn null(name: &str) -> Failure {
    Failure(SfStatus::NullArgument, format!("{name} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(SfStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn put<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|_| Failure(SfStatus::Internal, "string contains NUL".into()))?;
    if out.is_null() {
        return Err(null("out"));
    }
    out.write(c.into_raw());
    Ok(())
}

fn character(codepoint: u32) -> Result<char, Failure> {
    char::from_u32(codepoint).ok_or_else(|| Failure(SfStatus::OutOfRange, format!("{codepoint} is not a character")))
}

/// Library version, static string.
#[no_mangle]
pub extern "C" fn sf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next `sf_*` call on the same thread.
#[no_mangle]
pub extern "C" fn sf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub unsafe extern "C" fn sf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub unsafe extern "C" fn sf_bytes_free(data: *mut u8, len: usize) {
    if !data.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(data, len)));
    }
}

/// Built-in A–Z alphabet rendered at `canvas_size` pixels.
#[no_mangle]
pub unsafe extern "C" fn sf_targets_builtin(canvas_size: u32, out: *mut *mut SfTargets) -> SfStatus {
    guard(|| {
        if canvas_size < 8 {
            return Err(Failure(SfStatus::InvalidConfig, "canvas size must be at least 8".into()));
        }
        let targets = Box::new(SfTargets(builtin_alphabet(canvas_size as usize)));
        put(out, Box::into_raw(targets), "out")
    })
}

/// Loads a target directory (manifest.txt plus PGM files).
#[no_mangle]
pub unsafe extern "C" fn sf_targets_load(dir: *const c_char, out: *mut *mut SfTargets) -> SfStatus {
    guard(|| {
        let targets = load_targets(str_arg(dir, "dir")?)?;
        put(out, Box::into_raw(Box::new(SfTargets(targets))), "out")
    })
}

/// Number of characters, 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn sf_targets_len(targets: *const SfTargets) -> usize {
    targets.as_ref().map_or(0, |t| t.0.len())
}

#[no_mangle]
pub unsafe extern "C" fn sf_targets_free(targets: *mut SfTargets) {
    if !targets.is_null() {
        drop(Box::from_raw(targets));
    }
}

/// Creates a run and evaluates generation 0. `config_json` holds an
/// evolution config where every field is optional; null means all defaults.
/// `threads` 0 uses the global pool.
#[no_mangle]
pub unsafe extern "C" fn sf_run_new(
    config_json: *const c_char,
    targets: *const SfTargets,
    threads: u32,
    out: *mut *mut SfRun,
) -> SfStatus {
    guard(|| {
        let config: EvoConfig = if config_json.is_null() {
            EvoConfig::default()
        } else {
            serde_json::from_str(str_arg(config_json, "config_json")?)
                .map_err(|e| Failure(SfStatus::Parse, format!("config: {e}")))?
        };
        let targets = handle(targets, "targets")?.0.clone();
        let threads = (threads > 0).then_some(threads as usize);
        let evo = Evolution::with_threads(config, targets, threads)?;
        put(out, Box::into_raw(Box::new(SfRun(evo))), "out")
    })
}

/// Advances up to `max_generations`; stops early when the run is finished.
/// Writes the number of generations advanced to `advanced` when non-null.
#[no_mangle]
pub unsafe extern "C" fn sf_run_step(run: *mut SfRun, max_generations: u32, advanced: *mut u32) -> SfStatus {
    guard(|| {
        let run = run.as_mut().ok_or_else(|| null("run"))?;
        let mut n = 0;
        while n < max_generations && !run.0.is_finished() {
            run.0.step();
            n += 1;
        }
        if !advanced.is_null() {
            advanced.write(n);
        }
        Ok(())
    })
}

/// Latest completed generation.
#[no_mangle]
pub unsafe extern "C" fn sf_run_generation(run: *const SfRun) -> usize {
    run.as_ref().map_or(0, |r| r.0.generation())
}

#[no_mangle]
pub unsafe extern "C" fn sf_run_is_finished(run: *const SfRun) -> bool {
    run.as_ref().is_none_or(|r| r.0.is_finished())
}

#[no_mangle]
pub unsafe extern "C" fn sf_run_population_size(run: *const SfRun) -> usize {
    run.as_ref().map_or(0, |r| r.0.population().len())
}

#[no_mangle]
pub unsafe extern "C" fn sf_run_best_fitness(run: *const SfRun, out: *mut f64) -> SfStatus {
    guard(|| {
        let run = handle(run, "run")?;
        let best = run.0.population()[0].fitness.unwrap_or(f64::NAN);
        put(out, best, "out")
    })
}

/// Per-generation statistics as CSV.
#[no_mangle]
pub unsafe extern "C" fn sf_run_stats_csv(run: *const SfRun, out: *mut *mut c_char) -> SfStatus {
    guard(|| put_string(out, handle(run, "run")?.0.stats().to_csv()))
}

/// Document of the population member at `rank` (0 = fittest).
#[no_mangle]
pub unsafe extern "C" fn sf_run_document(run: *const SfRun, rank: usize, out: *mut *mut SfDocument) -> SfStatus {
    guard(|| {
        let evo = &handle(run, "run")?.0;
        let stencil = evo.population().get(rank).ok_or_else(|| {
            Failure(
                SfStatus::OutOfRange,
                format!("rank {rank} out of range for {}", evo.population().len()),
            )
        })?;
        let doc = population_document(stencil, evo.evaluator(), evo.config(), evo.generation());
        put(out, Box::into_raw(Box::new(SfDocument(doc))), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn sf_run_free(run: *mut SfRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

#[no_mangle]
pub unsafe extern "C" fn sf_document_load(path: *const c_char, out: *mut *mut SfDocument) -> SfStatus {
    guard(|| {
        let doc = stencilforge::io::load_stencil(str_arg(path, "path")?)?;
        put(out, Box::into_raw(Box::new(SfDocument(doc))), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn sf_document_from_json(json: *const c_char, out: *mut *mut SfDocument) -> SfStatus {
    guard(|| {
        let doc = StencilDocument::from_json(str_arg(json, "json")?)?;
        put(out, Box::into_raw(Box::new(SfDocument(doc))), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn sf_document_to_json(doc: *const SfDocument, out: *mut *mut c_char) -> SfStatus {
    guard(|| put_string(out, handle(doc, "doc")?.0.to_json()))
}

#[no_mangle]
pub unsafe extern "C" fn sf_document_save(doc: *const SfDocument, path: *const c_char) -> SfStatus {
    guard(|| Ok(stencilforge::io::save_stencil(&handle(doc, "doc")?.0, str_arg(path, "path")?)?))
}

#[no_mangle]
pub unsafe extern "C" fn sf_document_segment_count(doc: *const SfDocument) -> usize {
    doc.as_ref().map_or(0, |d| d.0.segments.len())
}

/// Every segment in its own color.
#[no_mangle]
pub unsafe extern "C" fn sf_document_stencil_svg(doc: *const SfDocument, out: *mut *mut c_char) -> SfStatus {
    guard(|| put_string(out, export_svg_stencil(&handle(doc, "doc")?.0)))
}

/// Best expression of the character with Unicode scalar `codepoint`.
#[no_mangle]
pub unsafe extern "C" fn sf_document_glyph_svg(
    doc: *const SfDocument,
    codepoint: u32,
    out: *mut *mut c_char,
) -> SfStatus {
    guard(|| put_string(out, export_svg_glyph(&handle(doc, "doc")?.0, character(codepoint)?)?))
}

/// Grayscale PNG of the best expression. Release with `sf_bytes_free`.
#[no_mangle]
pub unsafe extern "C" fn sf_document_glyph_png(
    doc: *const SfDocument,
    codepoint: u32,
    out: *mut *mut u8,
    out_len: *mut usize,
) -> SfStatus {
    guard(|| {
        let doc = &handle(doc, "doc")?.0;
        if out.is_null() || out_len.is_null() {
            return Err(null("out"));
        }
        let stencil = doc.to_stencil()?;
        let bytes = encode_png(&render_expression(&stencil, character(codepoint)?, &doc.render)?)?;
        let boxed = bytes.into_boxed_slice();
        out_len.write(boxed.len());
        out.write(Box::into_raw(boxed).cast());
        Ok(())
    })
}

/// Text specimen. `mapping_json` is null for plain strokes, otherwise a shape
/// mapping applied with the built-in shape library.
#[no_mangle]
pub unsafe extern "C" fn sf_document_specimen_svg(
    doc: *const SfDocument,
    text: *const c_char,
    mapping_json: *const c_char,
    tracking: f64,
    out: *mut *mut c_char,
) -> SfStatus {
    guard(|| {
        let doc = &handle(doc, "doc")?.0;
        let text = str_arg(text, "text")?;
        let mapping = if mapping_json.is_null() {
            None
        } else {
            Some(ShapeMapping::from_json(str_arg(mapping_json, "mapping_json")?)?)
        };
        let library = ShapeLibrary::builtin();
        let shapes = mapping.as_ref().map(|m| (&library, m));
        put_string(out, render_specimen(doc, text, shapes, tracking)?)
    })
}

#[no_mangle]
pub unsafe extern "C" fn sf_document_free(doc: *mut SfDocument) {
    if !doc.is_null() {
        drop(Box::from_raw(doc));
    }
}
