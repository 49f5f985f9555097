//! Result JSON and self-contained HTML reports.
//!
//! Each paragraph renders as a row of three columns: the text with every
//! sentence highlighted by stance, the reasoning trace of each selected
//! topic, and the synthesis with auxiliary details.
//!
//! Sentence spans carry two attributes for the drill-down script:
//!
//! - `data-stance`: the sentence class, e.g. `leaning hawkish`.
//! - `data-trace-ids`: space-separated ids of the reasoning blocks
//!   (`<details>` elements) that informed the sentence.
//!
//! The script is embedded in the single `<script>` element that follows
//! the [`SCRIPT_MARKER`] comment. Without a script the report is static
//! and all traces are expanded.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use regex::Regex;

use crate::config::ReportConfig;
use crate::reasoner::{DocumentResult, ParagraphResult, TopicTrace};
use crate::stance::StanceClass;

pub const SCRIPT_MARKER: &str = "<!-- hawkdove:drilldown-script -->";

#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub result: DocumentResult,
    pub html: String,
    pub warnings: Vec<String>,
}

/// Pretty-printed JSON with a trailing newline. Field order follows the
/// type definitions, so output is stable.
pub fn export_result_json(r: &DocumentResult) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(r).expect("DocumentResult serializes");
    out.push(b'\n');
    out
}

pub fn load_result_json(bytes: &[u8]) -> Result<DocumentResult, serde_json::Error> {
    serde_json::from_slice(bytes)
}

pub fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

fn stance_css(c: StanceClass) -> String {
    format!("stance-{}", c.as_str().replace(' ', "-"))
}

pub fn sentence_id(paragraph: usize, sentence: usize) -> String {
    format!("p{paragraph}-s{sentence}")
}

static EXTERNAL_URL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"(?i)\b(?:src|href)\s*=\s*["']?\s*((?:https?:)?//[^"'\s>]*)"#).unwrap());

/// URLs referenced from `src` or `href` attributes that would load over
/// the network.
pub fn external_resource_urls(html: &str) -> Vec<String> {
    EXTERNAL_URL.captures_iter(html).map(|c| c[1].to_string()).collect()
}

pub fn render_document_report(r: &DocumentResult, script_asset: &str) -> ReportBundle {
    render_document_report_with(r, script_asset, &ReportConfig::default())
}

pub fn render_document_report_with(r: &DocumentResult, script_asset: &str, cfg: &ReportConfig) -> ReportBundle {
    let mut h = String::new();
    let title = format!("{} stance report", r.doc_id);
    let _ = write!(
        h,
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>{}</title>\n<style>\n{}</style>\n</head>\n<body>\n",
        escape_html(&title),
        stylesheet(cfg)
    );
    let _ = writeln!(
        h,
        "<header>\n<h1>{}</h1>\n<p class=\"meta\">{} | {} | {} paragraph(s)</p>\n{}</header>",
        escape_html(&r.doc_id),
        r.date,
        escape_html(&r.doc_type),
        r.paragraphs.len(),
        legend()
    );
    h.push_str("<main>\n");
    for p in &r.paragraphs {
        render_paragraph(&mut h, p);
    }
    h.push_str("</main>\n");
    if !r.warnings.is_empty() {
        h.push_str("<footer class=\"warnings\">\n<h2>Warnings</h2>\n<ul>\n");
        for w in &r.warnings {
            let _ = writeln!(h, "<li>{}</li>", escape_html(w));
        }
        h.push_str("</ul>\n</footer>\n");
    }
    let _ = write!(h, "{SCRIPT_MARKER}\n<script>\n{}</script>\n</body>\n</html>\n", escape_script(script_asset));

    let mut warnings = r.warnings.clone();
    let external = external_resource_urls(&h);
    if !external.is_empty() {
        warnings.push(format!("report references external resources: {}", external.join(", ")));
    }
    ReportBundle { result: r.clone(), html: h, warnings }
}

// `</script` inside the asset would close the element early.
fn escape_script(s: &str) -> String {
    let mut out = s.replace("</script", "<\\/script").replace("</SCRIPT", "<\\/SCRIPT");
    if !out.is_empty() && !out.ends_with('\n') {
        out.push('\n');
    }
    out
}

fn legend() -> String {
    let mut s = String::from("<p class=\"legend\">");
    for c in StanceClass::ALL {
        let _ = write!(s, "<span class=\"{}\">{}</span> ", stance_css(c), c);
    }
    s.truncate(s.len() - 1);
    s.push_str("</p>\n");
    s
}

fn render_paragraph(h: &mut String, p: &ParagraphResult) {
    let i = p.paragraph_index;
    let trace_ids: Vec<String> = p.traces.iter().map(|t| t.trace_id(i)).collect();
    let _ = writeln!(h, "<section class=\"paragraph{}\" id=\"p{i}\">", if p.degraded { " degraded" } else { "" });

    h.push_str("<div class=\"col text\">\n<p>");
    for (j, s) in p.sentence_classes.iter().enumerate() {
        if j > 0 {
            h.push(' ');
        }
        let _ = write!(
            h,
            "<span class=\"sentence {}\" id=\"{}\" data-stance=\"{}\" data-trace-ids=\"{}\" title=\"{}\">{}</span>",
            stance_css(s.stance),
            sentence_id(i, j),
            s.stance,
            trace_ids.join(" "),
            s.stance,
            escape_html(&s.text)
        );
    }
    h.push_str("</p>\n</div>\n");

    h.push_str("<div class=\"col reasoning\">\n");
    if p.traces.is_empty() {
        h.push_str("<p class=\"empty\">No topic was selected for this paragraph.</p>\n");
    }
    for t in &p.traces {
        render_trace(h, t, i);
    }
    h.push_str("</div>\n");

    let _ = writeln!(
        h,
        "<div class=\"col synthesis\">\n<div class=\"synthesis-block\">\n<p>Paragraph: <span class=\"{}\">{}</span></p>",
        stance_css(p.paragraph_class),
        p.paragraph_class
    );
    if p.degraded {
        h.push_str("<p class=\"flag\">Degraded: deterministic fallback synthesis.</p>\n");
    }
    if !p.topics.is_empty() {
        h.push_str("<table class=\"topics\">\n<tr><th>rank</th><th>topic</th><th>score</th></tr>\n");
        for e in &p.topics.entries {
            let _ =
                writeln!(h, "<tr><td>{}</td><td>{}</td><td>{:.4}</td></tr>", e.rank, escape_html(&e.mnemonic), e.score);
        }
        h.push_str("</table>\n");
    }
    if !p.warnings.is_empty() {
        h.push_str("<ul class=\"warnings\">\n");
        for w in &p.warnings {
            let _ = writeln!(h, "<li>{}</li>", escape_html(w));
        }
        h.push_str("</ul>\n");
    }
    h.push_str("</div>\n</div>\n</section>\n");
}

fn render_trace(h: &mut String, t: &TopicTrace, paragraph: usize) {
    let _ = writeln!(
        h,
        "<details class=\"trace\" id=\"{}\" open>\n<summary>{} <span class=\"{}\">{}</span></summary>\n<ol class=\"steps\">",
        escape_html(&t.trace_id(paragraph)),
        escape_html(&t.mnemonic),
        stance_css(t.assessment.stance),
        t.assessment.stance
    );
    for s in &t.path.steps {
        let _ = writeln!(
            h,
            "<li><p class=\"q\">{}</p><p class=\"a\">{}</p></li>",
            escape_html(&s.question),
            escape_html(&s.answer)
        );
    }
    let _ = writeln!(
        h,
        "</ol>\n<p class=\"assessment\">Assessment: {}. {}</p>\n</details>",
        t.assessment.stance,
        escape_html(&t.assessment.rationale)
    );
}

fn stylesheet(cfg: &ReportConfig) -> String {
    let mut css = String::from(
        "body { font-family: system-ui, sans-serif; margin: 1.5rem; color: #222; }\n\
         section.paragraph { display: grid; grid-template-columns: 2fr 2fr 1fr; gap: 1rem; border-top: 1px solid #ccc; padding: 0.75rem 0; }\n\
         section.degraded { background: #fff8e1; }\n\
         .col.text p { line-height: 1.6; }\n\
         .sentence { padding: 0.1rem 0.15rem; border-radius: 0.2rem; cursor: pointer; }\n\
         details.trace { margin-bottom: 0.5rem; }\n\
         .steps p { margin: 0.1rem 0; }\n\
         .steps .q { font-style: italic; }\n\
         .steps .a::before { content: \"\\2192  \"; }\n\
         table.topics { font-size: 0.85rem; border-collapse: collapse; }\n\
         table.topics td, table.topics th { padding: 0 0.4rem; text-align: left; }\n\
         .legend span { padding: 0.1rem 0.4rem; margin-right: 0.25rem; }\n\
         .flag, .warnings { color: #8a4b00; font-size: 0.85rem; }\n",
    );
    for (c, colour) in StanceClass::ALL.iter().zip(&cfg.palette) {
        let _ = writeln!(css, ".{} {{ background: {colour}; }}", stance_css(*c));
    }
    css
}

/// Replace characters that are unsafe in file names.
pub fn file_stem(doc_id: &str) -> String {
    let s: String =
        doc_id.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect();
    if s.is_empty() || s.starts_with('.') {
        format!("_{s}")
    } else {
        s
    }
}

pub fn result_path(dir: &Path, doc_id: &str) -> PathBuf {
    dir.join(format!("{}.result.json", file_stem(doc_id)))
}

pub fn report_path(dir: &Path, doc_id: &str) -> PathBuf {
    dir.join(format!("{}.report.html", file_stem(doc_id)))
}

pub fn write_result(dir: &Path, r: &DocumentResult) -> io::Result<PathBuf> {
    let path = result_path(dir, &r.doc_id);
    std::fs::write(&path, export_result_json(r))?;
    Ok(path)
}

pub fn write_report(dir: &Path, bundle: &ReportBundle) -> io::Result<PathBuf> {
    let path = report_path(dir, &bundle.result.doc_id);
    std::fs::write(&path, &bundle.html)?;
    Ok(path)
}
