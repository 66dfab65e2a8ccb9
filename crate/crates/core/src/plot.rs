//! SVG overlays of predicted and ground-truth graphs.
//!
//! Ground truth is drawn in blue, the prediction in translucent red on top,
//! so shared edges come out purple.

use std::fmt::Write as _;

use base64::Engine as _;

use crate::error::Result;
use crate::graph::Graph;
use crate::image::{encode_png, GrayImage};

const GT_COLOUR: &str = "#0000ff";
const PRED_COLOUR: &str = "#ff0000";
const NODE_COLOUR: &str = "#ffff00";
const KEYPOINT_COLOUR: &str = "#00ffff";

fn edges(out: &mut String, g: &Graph, colour: &str, opacity: f64, width: f64) {
    let _ = writeln!(out, r#"  <g stroke="{colour}" stroke-opacity="{opacity}" stroke-width="{width}" stroke-linecap="round">"#);
    for &(a, b) in &g.edges {
        let (p, q) = (g.nodes[a], g.nodes[b]);
        let _ = writeln!(out, r#"    <line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#, p.x, p.y, q.x, q.y);
    }
    out.push_str("  </g>\n");
}

fn nodes(out: &mut String, g: &Graph, r: f64) {
    let degrees = g.degrees();
    let _ = writeln!(out, r#"  <g stroke="none">"#);
    for (p, d) in g.nodes.iter().zip(degrees) {
        let fill = if d == 2 { NODE_COLOUR } else { KEYPOINT_COLOUR };
        let _ = writeln!(out, r#"    <circle cx="{:.2}" cy="{:.2}" r="{r:.2}" fill="{fill}"/>"#, p.x, p.y);
    }
    out.push_str("  </g>\n");
}

/// Overlay of `pred` on `gt`, optionally over the input raster.
///
/// Nodes are taken from the prediction when it has any, otherwise from the
/// ground truth; keypoints (degree other than 2) are cyan.
pub fn render_svg(gt: &Graph, pred: Option<&Graph>, background: Option<&GrayImage>) -> Result<String> {
    let (w, h) = gt.canvas;
    let scale = (w.max(h) as f64 / 256.0).max(0.5);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" xmlns:xlink="http://www.w3.org/1999/xlink" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(out, r#"  <rect width="{w}" height="{h}" fill="black"/>"#);
    if let Some(img) = background {
        let data = base64::engine::general_purpose::STANDARD.encode(encode_png(img)?);
        let _ = writeln!(
            out,
            r#"  <image width="{w}" height="{h}" opacity="0.5" xlink:href="data:image/png;base64,{data}"/>"#
        );
    }
    edges(&mut out, gt, GT_COLOUR, 1.0, 1.5 * scale);
    if let Some(p) = pred {
        edges(&mut out, p, PRED_COLOUR, 0.5, 1.5 * scale);
    }
    let shown = pred.filter(|p| p.node_count() > 0).unwrap_or(gt);
    nodes(&mut out, shown, 1.5 * scale);
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{edge, Point};
    use quick_xml::events::Event;
    use quick_xml::Reader;

    fn sample() -> Graph {
        Graph::new(
            (64, 64),
            vec![Point::new(10.0, 10.0), Point::new(30.0, 10.0), Point::new(30.0, 40.0), Point::new(50.0, 40.0)],
            [edge(0, 1), edge(1, 2), edge(2, 3)],
        )
        .unwrap()
    }

    fn elements(svg: &str) -> Vec<(String, Vec<(String, String)>)> {
        let mut reader = Reader::from_str(svg);
        let mut out = Vec::new();
        loop {
            match reader.read_event().expect("well-formed XML") {
                Event::Eof => break,
                Event::Start(e) | Event::Empty(e) => {
                    let attrs = e
                        .attributes()
                        .map(|a| {
                            let a = a.unwrap();
                            (String::from_utf8(a.key.as_ref().to_vec()).unwrap(), a.unescape_value().unwrap().into_owned())
                        })
                        .collect();
                    out.push((String::from_utf8(e.name().as_ref().to_vec()).unwrap(), attrs));
                }
                _ => {}
            }
        }
        out
    }

    fn group_colours(svg: &str) -> Vec<String> {
        elements(svg)
            .into_iter()
            .filter(|(n, _)| n == "g")
            .filter_map(|(_, a)| a.into_iter().find(|(k, _)| k == "stroke").map(|(_, v)| v))
            .filter(|v| v != "none")
            .collect()
    }

    #[test]
    fn identical_graphs_overlap_and_parse() {
        let g = sample();
        let bg = crate::image::blank(64, 64);
        let svg = render_svg(&g, Some(&g), Some(&bg)).unwrap();
        assert_eq!(group_colours(&svg), vec![GT_COLOUR, PRED_COLOUR]);
        let els = elements(&svg);
        let lines = els.iter().filter(|(n, _)| n == "line").count();
        assert_eq!(lines, 6);
        assert!(els.iter().any(|(n, _)| n == "image"));
        let circles: Vec<_> = els.iter().filter(|(n, _)| n == "circle").collect();
        let cyan = circles.iter().filter(|(_, a)| a.iter().any(|(_, v)| v == KEYPOINT_COLOUR)).count();
        assert_eq!((circles.len(), cyan), (4, 2));
    }

    #[test]
    fn empty_prediction_shows_only_ground_truth() {
        let g = sample();
        let svg = render_svg(&g, Some(&Graph::empty(g.canvas)), None).unwrap();
        let els = elements(&svg);
        assert_eq!(els.iter().filter(|(n, _)| n == "line").count(), 3);
        assert!(!els.iter().any(|(n, _)| n == "image"));
    }
}
