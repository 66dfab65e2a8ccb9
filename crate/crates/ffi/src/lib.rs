//! C ABI over `sfstree`.
//!
//! Every entry point returns an [`SfsStatus`] and writes results through out
//! pointers. On failure, [`sfs_last_error`] describes the most recent error on
//! the calling thread. Panics never cross the boundary; they surface as
//! [`SfsStatus::Panic`].
//!
//! Pair arrays use the upper-triangle order `(0,1), (0,2), ..., (n-2,n-1)`;
//! logit and probability arrays hold two doubles per pair, edge side first.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::slice;

use sfstree::image::GrayImage;
use sfstree::lsystem::{rewrite, LSequence, Rule};
use sfstree::metrics;
use sfstree::predictor::{infer, Checkpoint, Mlp, Mode};
use sfstree::sfs::{self, EdgeLogits, EdgeProbabilities, EdgeTargets, SfsConfig};
use sfstree::{mst_project, Error, Graph, PairIndex, Point};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidGraph = 3,
    Io = 4,
    Parse = 5,
    Checkpoint = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfsMode {
    Unconstrained = 0,
    TestTimeConstraint = 1,
    Sfs = 2,
}

/// Opaque graph handle.
pub struct SfsGraph(Graph);

/// Opaque trained predictor handle.
pub struct SfsPredictor(Mlp);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(SfsStatus, String);

type FfiResult = Result<(), Failure>;

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidGraph(_) | Error::NotATree(_) | Error::SkeletonCycle { .. } => SfsStatus::InvalidGraph,
            Error::Io(_) | Error::File { .. } | Error::Image(_) => SfsStatus::Io,
            Error::Json(_) | Error::MalformedRule(_) => SfsStatus::Parse,
            Error::Checkpoint(_) => SfsStatus::Checkpoint,
            _ => SfsStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: SfsStatus, message: impl Into<String>) -> Failure {
    Failure(status, message.into())
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> FfiResult) -> SfsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            SfsStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            SfsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(SfsStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(SfsStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(SfsStatus::NullPointer, format!("{name} is null")));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn slice_out<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(fail(SfsStatus::NullPointer, format!("{name} is null")));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn write<T>(p: *mut T, value: T, name: &str) -> FfiResult {
    if p.is_null() {
        return Err(fail(SfsStatus::NullPointer, format!("{name} is null")));
    }
    p.write(value);
    Ok(())
}

unsafe fn graph_ref<'a>(g: *const SfsGraph, name: &str) -> Result<&'a Graph, Failure> {
    g.as_ref().map(|g| &g.0).ok_or_else(|| fail(SfsStatus::NullPointer, format!("{name} is null")))
}

fn pairs_of(flat: &[f64]) -> Vec<[f64; 2]> {
    flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect()
}

/// Message of the last failed call on this thread; empty after a success.
///
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn sfs_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sfs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Number of node pairs for `n` nodes, `n (n - 1) / 2`.
#[no_mangle]
pub extern "C" fn sfs_pair_count(n: usize) -> usize {
    PairIndex::new(n).len()
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn sfs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a graph from its JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sfs_graph_from_json(json: *const c_char, out: *mut *mut SfsGraph) -> SfsStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let g = Graph::from_json_str(text)?;
        write(out, Box::into_raw(Box::new(SfsGraph(g))), "out")
    })
}

/// Builds a graph from coordinates and an edge list of index pairs.
///
/// # Safety
/// `xy` holds `2 * node_count` doubles and `edges` `2 * edge_count` indices.
#[no_mangle]
pub unsafe extern "C" fn sfs_graph_new(
    width: u32,
    height: u32,
    xy: *const f64,
    node_count: usize,
    edges: *const usize,
    edge_count: usize,
    out: *mut *mut SfsGraph,
) -> SfsStatus {
    guard(|| {
        let xy = slice_arg(xy, 2 * node_count, "xy")?;
        let e = slice_arg(edges, 2 * edge_count, "edges")?;
        let nodes = xy.chunks_exact(2).map(|c| Point::new(c[0], c[1])).collect();
        let pairs: Vec<_> = e.chunks_exact(2).map(|c| (c[0], c[1])).collect();
        let g = Graph::new((width, height), nodes, pairs)?;
        write(out, Box::into_raw(Box::new(SfsGraph(g))), "out")
    })
}

/// Loads a graph JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sfs_graph_load(path: *const c_char, out: *mut *mut SfsGraph) -> SfsStatus {
    guard(|| {
        let g = Graph::load(Path::new(str_arg(path, "path")?))?;
        write(out, Box::into_raw(Box::new(SfsGraph(g))), "out")
    })
}

/// Serialises a graph to JSON; free the result with [`sfs_string_free`].
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sfs_graph_to_json(g: *const SfsGraph, out: *mut *mut c_char) -> SfsStatus {
    guard(|| {
        let text = graph_ref(g, "graph")?.to_json_string();
        let c = CString::new(text).map_err(|_| fail(SfsStatus::InvalidArgument, "interior NUL"))?;
        write(out, c.into_raw(), "out")
    })
}

/// Releases a graph handle. Null is ignored.
///
/// # Safety
/// `g` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn sfs_graph_free(g: *mut SfsGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Node and edge counts.
///
/// # Safety
/// `g` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn sfs_graph_counts(g: *const SfsGraph, nodes: *mut usize, edges: *mut usize) -> SfsStatus {
    guard(|| {
        let g = graph_ref(g, "graph")?;
        write(nodes, g.node_count(), "nodes")?;
        write(edges, g.edge_count(), "edges")
    })
}

/// Whether the graph is connected and acyclic.
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sfs_graph_is_tree(g: *const SfsGraph, out: *mut bool) -> SfsStatus {
    guard(|| write(out, graph_ref(g, "graph")?.is_tree(), "out"))
}

/// Projects thresholded edge probabilities onto their minimum spanning tree.
///
/// `edge_prob` holds one edge-existence probability per pair. The `n - 1`
/// tree edges are written to `tree_edges` as index pairs, which must have
/// room for `2 * (n - 1)` entries. Counts of added and removed pairs go to
/// `added` and `removed`.
///
/// # Safety
/// Buffers must have the documented lengths; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn sfs_mst_project(
    n: usize,
    edge_prob: *const f64,
    tree_edges: *mut usize,
    tree_capacity: usize,
    added: *mut usize,
    removed: *mut usize,
) -> SfsStatus {
    guard(|| {
        let p = slice_arg(edge_prob, PairIndex::new(n).len(), "edge_prob")?;
        let probs = EdgeProbabilities::from_edge_probabilities(n, p)?;
        let (tree, diff) = mst_project(&probs, &sfs::threshold_edges(&probs));
        if tree_capacity < 2 * tree.len() {
            return Err(fail(SfsStatus::BufferTooSmall, format!("tree needs {} slots", 2 * tree.len())));
        }
        let buf = slice_out(tree_edges, 2 * tree.len(), "tree_edges")?;
        for (slot, &(a, b)) in buf.chunks_exact_mut(2).zip(&tree) {
            slot[0] = a;
            slot[1] = b;
        }
        write(added, diff.added.len(), "added")?;
        write(removed, diff.removed.len(), "removed")
    })
}

/// Suppression forward pass: constrained probabilities for raw logits.
///
/// # Safety
/// `logits` and `constrained` hold `2 * sfs_pair_count(n)` doubles.
#[no_mangle]
pub unsafe extern "C" fn sfs_forward(n: usize, logits: *const f64, lambda: f64, constrained: *mut f64) -> SfsStatus {
    guard(|| {
        let len = 2 * PairIndex::new(n).len();
        let l = EdgeLogits::new(n, pairs_of(slice_arg(logits, len, "logits")?))?;
        let fw = sfs::sfs_forward(&l, &SfsConfig::new(lambda)?)?;
        let out = slice_out(constrained, len, "constrained")?;
        for (slot, v) in out.chunks_exact_mut(2).zip(fw.constrained.values()) {
            slot.copy_from_slice(v);
        }
        Ok(())
    })
}

/// Combined edge loss and its gradient w.r.t. the logits.
///
/// `targets` holds one byte per pair, nonzero for ground-truth edges.
///
/// # Safety
/// `logits` and `grad` hold `2 * sfs_pair_count(n)` doubles, `targets`
/// `sfs_pair_count(n)` bytes; `loss` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sfs_backward(
    n: usize,
    logits: *const f64,
    targets: *const u8,
    lambda: f64,
    grad: *mut f64,
    loss: *mut f64,
) -> SfsStatus {
    guard(|| {
        let pairs = PairIndex::new(n).len();
        let l = EdgeLogits::new(n, pairs_of(slice_arg(logits, 2 * pairs, "logits")?))?;
        let t = EdgeTargets::new(n, slice_arg(targets, pairs, "targets")?.iter().map(|&b| b != 0).collect())?;
        let cfg = SfsConfig::new(lambda)?;
        let fw = sfs::sfs_forward(&l, &cfg)?;
        let g = sfs::sfs_backward(&l, &fw.diff, &t, &cfg)?;
        let value = sfs::sfs_loss(&l, &fw.diff, &t, &cfg)?.total;
        let out = slice_out(grad, 2 * pairs, "grad")?;
        for (slot, v) in out.chunks_exact_mut(2).zip(&g) {
            slot.copy_from_slice(v);
        }
        write(loss, value, "loss")
    })
}

/// SMD between two graphs with `m` points each; `sentinel` reports the empty-graph fallback.
///
/// # Safety
/// Handles must be live; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn sfs_smd(
    pred: *const SfsGraph,
    gt: *const SfsGraph,
    m: usize,
    out: *mut f64,
    sentinel: *mut bool,
) -> SfsStatus {
    guard(|| {
        let s = metrics::smd(graph_ref(pred, "pred")?, graph_ref(gt, "gt")?, m)?;
        write(out, s.value, "out")?;
        if !sentinel.is_null() {
            sentinel.write(s.sentinel);
        }
        Ok(())
    })
}

/// Keypoint precision, recall and F1.
///
/// # Safety
/// Handles must be live; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn sfs_topo(
    pred: *const SfsGraph,
    gt: *const SfsGraph,
    radius: f64,
    angle_tol_deg: f64,
    precision: *mut f64,
    recall: *mut f64,
    f1: *mut f64,
) -> SfsStatus {
    guard(|| {
        let t = metrics::topo(graph_ref(pred, "pred")?, graph_ref(gt, "gt")?, radius, angle_tol_deg)?;
        write(precision, t.precision, "precision")?;
        write(recall, t.recall, "recall")?;
        write(f1, t.f1, "f1")
    })
}

/// Loads a predictor checkpoint, checking its architecture.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sfs_predictor_load(path: *const c_char, out: *mut *mut SfsPredictor) -> SfsStatus {
    guard(|| {
        let mlp = Checkpoint::load(Path::new(str_arg(path, "path")?))?.mlp()?;
        write(out, Box::into_raw(Box::new(SfsPredictor(mlp))), "out")
    })
}

/// Releases a predictor handle. Null is ignored.
///
/// # Safety
/// `p` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn sfs_predictor_free(p: *mut SfsPredictor) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Predicts edges among `node_count` nodes on an 8-bit grayscale image.
///
/// `mode` is one of the [`SfsMode`] values.
///
/// # Safety
/// `pixels` holds `width * height` row-major bytes, `xy` `2 * node_count`
/// doubles; `p` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sfs_predictor_infer(
    p: *const SfsPredictor,
    pixels: *const u8,
    width: u32,
    height: u32,
    xy: *const f64,
    node_count: usize,
    mode: u32,
    out: *mut *mut SfsGraph,
) -> SfsStatus {
    guard(|| {
        let mlp = &p.as_ref().ok_or_else(|| fail(SfsStatus::NullPointer, "predictor is null"))?.0;
        let px = slice_arg(pixels, width as usize * height as usize, "pixels")?;
        let img = GrayImage::from_raw(width, height, px.to_vec())
            .ok_or_else(|| fail(SfsStatus::InvalidArgument, "pixel buffer does not match the size"))?;
        let nodes: Vec<Point> =
            slice_arg(xy, 2 * node_count, "xy")?.chunks_exact(2).map(|c| Point::new(c[0], c[1])).collect();
        let mode = match mode {
            m if m == SfsMode::Unconstrained as u32 => Mode::Unconstrained,
            m if m == SfsMode::TestTimeConstraint as u32 => Mode::TestTimeConstraint,
            m if m == SfsMode::Sfs as u32 => Mode::Sfs,
            m => return Err(fail(SfsStatus::InvalidArgument, format!("unknown mode {m}"))),
        };
        let g = infer(mlp, &img, &nodes, mode)?;
        write(out, Box::into_raw(Box::new(SfsGraph(g))), "out")
    })
}

/// One rewriting step of an L-system sequence; free the result with [`sfs_string_free`].
///
/// `rule` is either a production for `A` such as `F[-A]` or a full
/// `F->F; A->F[-A]` rule.
///
/// # Safety
/// Inputs must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sfs_lsystem_rewrite(seq: *const c_char, rule: *const c_char, out: *mut *mut c_char) -> SfsStatus {
    guard(|| {
        let s: LSequence = str_arg(seq, "seq")?.parse()?;
        let r = Rule::parse(str_arg(rule, "rule")?)?;
        let text = rewrite(&s, &r).to_string();
        let c = CString::new(text).map_err(|_| fail(SfsStatus::InvalidArgument, "interior NUL"))?;
        write(out, c.into_raw(), "out")
    })
}
