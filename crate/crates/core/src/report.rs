//! Single-file HTML rendering of a bundle. Images are inlined as base64 and
//! nothing is fetched over the network; output depends only on the bundle.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use thiserror::Error;

use crate::domain::StoryBundle;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("reading image {path}: {reason}")]
    Image { path: String, reason: String },
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
            _ => out.push(c),
        }
    }
    out
}

const STYLE: &str = "body{font-family:Georgia,serif;max-width:960px;margin:2em auto;padding:0 1em;color:#222}\
h1,h2{font-family:Helvetica,Arial,sans-serif}\
.scenes{display:grid;grid-template-columns:repeat(auto-fit,minmax(420px,1fr));gap:1.5em}\
.scene{border:1px solid #ccc;border-radius:6px;padding:1em}\
.scene img{width:100%;height:auto;border-radius:4px}\
.placeholder{display:flex;align-items:center;justify-content:center;aspect-ratio:1;background:#eee;color:#777}\
.narration{font-size:1.1em}\
pre{white-space:pre-wrap;background:#f6f6f6;padding:.5em;font-size:.85em}";

fn paragraphs(out: &mut String, text: &str) {
    for para in text.split("\n\n").map(str::trim).filter(|p| !p.is_empty()) {
        let _ = writeln!(out, "<p>{}</p>", escape_html(para).replace('\n', "<br>"));
    }
}

/// Renders `bundle`, reading referenced images relative to `dir`.
pub fn render_report(bundle: &StoryBundle, dir: &Path) -> Result<String, ReportError> {
    let mut out = String::new();
    let title = bundle.prompt.text.lines().next().unwrap_or("").trim();
    out.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
    let _ = writeln!(out, "<title>{}</title>", escape_html(title));
    let _ = writeln!(out, "<style>{STYLE}</style>\n</head>\n<body>");
    let _ = writeln!(out, "<h1>{}</h1>", escape_html(title));

    out.push_str("<section class=\"story\">\n<h2>Story</h2>\n");
    if let Some(story) = &bundle.story {
        paragraphs(&mut out, &story.text);
        let _ = writeln!(out, "<p><small>{} words</small></p>", story.word_count);
    }
    out.push_str("</section>\n");

    out.push_str("<section>\n<h2>Scenes</h2>\n<div class=\"scenes\">\n");
    for (i, scene) in bundle.scenes.iter().enumerate() {
        let n = i + 1;
        let _ = writeln!(out, "<article class=\"scene\" id=\"scene-{n}\">");
        let _ = writeln!(out, "<h3>Scene {n}: {}</h3>", scene.context.arc_role.label());
        match &scene.image_ref {
            Some(rel) => {
                let path = dir.join(rel);
                let bytes = fs::read(&path)
                    .map_err(|e| ReportError::Image { path: path.display().to_string(), reason: e.to_string() })?;
                let _ = writeln!(
                    out,
                    "<img src=\"data:image/png;base64,{}\" alt=\"Scene {n}\">",
                    STANDARD.encode(bytes)
                );
            }
            None => {
                let _ = writeln!(out, "<div class=\"placeholder\">Scene {n}: no image in this bundle</div>");
            }
        }
        if let Some(plan) = &scene.plan {
            let _ = writeln!(out, "<p class=\"narration\">{}</p>", escape_html(&plan.narration));
        }
        let _ = writeln!(out, "<p><em>{}</em></p>", escape_html(&scene.context.description));
        if let Some(t2i) = &scene.t2i {
            out.push_str("<details>\n<summary>Image prompt</summary>\n");
            let _ = writeln!(out, "<pre>{}</pre>", escape_html(&t2i.positive));
            let _ = writeln!(out, "<p>Negative prompt</p>\n<pre>{}</pre>", escape_html(&t2i.negative));
            out.push_str("</details>\n");
        }
        out.push_str("</article>\n");
    }
    out.push_str("</div>\n</section>\n");

    out.push_str("<section>\n<h2>Characters</h2>\n<dl>\n");
    for c in &bundle.characters {
        let _ = writeln!(out, "<dt>{}</dt><dd>{}</dd>", escape_html(&c.name), escape_html(&c.description));
    }
    out.push_str("</dl>\n</section>\n");

    out.push_str("<section>\n<h2>Culture notes</h2>\n<ul>\n");
    for item in &bundle.culture.items {
        let _ = writeln!(out, "<li>{}</li>", escape_html(item));
    }
    out.push_str("</ul>\n</section>\n</body>\n</html>\n");
    Ok(out)
}
