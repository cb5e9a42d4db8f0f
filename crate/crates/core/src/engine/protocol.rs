//! The three XML-ish response blocks an agent may emit during the step loop.

use serde::{Deserialize, Serialize};

use crate::corpus::{Anatomy, Modality};
use crate::tools::{render_key_list, scan_keys, InfoKey, ToolCategory, Variant};
use crate::toolset_sim::GapKind;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallBlock {
    pub purpose: String,
    pub tool: String,
    pub inputs: Vec<InfoKey>,
}

/// A refusal naming the missing resource. `None` scope fields mean
/// Universal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoCallBlock {
    pub purpose: String,
    pub category: ToolCategory,
    pub variant: Option<Variant>,
    pub anatomy: Option<Anatomy>,
    pub modality: Option<Modality>,
    pub ability: GapKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ProtocolMessage {
    Call(CallBlock),
    EndCall(CallBlock),
    NoCall(NoCallBlock),
    ParseFailure { reason: String },
}

impl ProtocolMessage {
    fn failure(reason: impl Into<String>) -> ProtocolMessage {
        ProtocolMessage::ParseFailure { reason: reason.into() }
    }

    pub fn call_block(&self) -> Option<&CallBlock> {
        match self {
            ProtocolMessage::Call(c) | ProtocolMessage::EndCall(c) => Some(c),
            _ => None,
        }
    }
}

const BLOCKS: [&str; 3] = ["Call", "EndCall", "NoCall"];

/// Locate and decode the single protocol block in an agent response.
/// Reflection blocks and surrounding prose are ignored.
pub fn parse_protocol(text: &str) -> ProtocolMessage {
    let text = strip_block(text, "Reflection");
    let mut found: Vec<(&str, usize)> = Vec::new();
    for tag in BLOCKS {
        let open = format!("<{tag}>");
        found.extend(text.match_indices(&open).map(|(i, _)| (tag, i)));
    }
    let (tag, start) = match found.as_slice() {
        [] => return ProtocolMessage::failure("no protocol block"),
        [one] => *one,
        _ => return ProtocolMessage::failure("multiple protocol blocks"),
    };
    let open_len = tag.len() + 2;
    let close = format!("</{tag}>");
    let Some(end) = text[start + open_len..].find(&close) else {
        return ProtocolMessage::failure(format!("unterminated <{tag}> block"));
    };
    let body = &text[start + open_len..start + open_len + end];
    match tag {
        "NoCall" => parse_nocall(body),
        _ => match parse_call(body) {
            Ok(c) if tag == "Call" => ProtocolMessage::Call(c),
            Ok(c) => ProtocolMessage::EndCall(c),
            Err(reason) => ProtocolMessage::failure(reason),
        },
    }
}

fn parse_call(body: &str) -> Result<CallBlock, String> {
    let purpose = child(body, "Purpose").unwrap_or_default();
    let tool = child(body, "Tool").ok_or("missing <Tool>")?;
    let tool = tool.split_whitespace().next().unwrap_or_default().to_string();
    if tool.is_empty() {
        return Err("empty <Tool>".into());
    }
    let input = child_raw(body, "Input").ok_or("missing <Input>")?;
    let inputs = scan_keys(input).map_err(|e| e.to_string())?;
    Ok(CallBlock { purpose, tool, inputs })
}

fn parse_nocall(body: &str) -> ProtocolMessage {
    let purpose = child(body, "Purpose").unwrap_or_default();
    let Some(category) = child(body, "Category") else {
        return ProtocolMessage::failure("missing <Category>");
    };
    let (category, variant) = match ToolCategory::resolve(&category) {
        Ok(hit) => hit,
        Err(e) => return ProtocolMessage::failure(e.to_string()),
    };
    let anatomy = match scope_field::<Anatomy>(body, "Anatomy") {
        Ok(a) => a,
        Err(r) => return ProtocolMessage::failure(r),
    };
    let modality = match scope_field::<Modality>(body, "Modality") {
        Ok(m) => m,
        Err(r) => return ProtocolMessage::failure(r),
    };
    let Some(ability) = child(body, "Ability") else {
        return ProtocolMessage::failure("missing <Ability>");
    };
    let Ok(ability) = ability.parse::<GapKind>() else {
        return ProtocolMessage::failure(format!("unknown ability `{ability}`"));
    };
    ProtocolMessage::NoCall(NoCallBlock { purpose, category, variant, anatomy, modality, ability })
}

/// Missing or "Universal" → `None`.
fn scope_field<T: std::str::FromStr>(body: &str, tag: &str) -> Result<Option<T>, String> {
    match child(body, tag) {
        None => Ok(None),
        Some(v) if v.eq_ignore_ascii_case("universal") || v.is_empty() => Ok(None),
        Some(v) => v.parse().map(Some).map_err(|_| format!("unknown {} `{v}`", tag.to_lowercase())),
    }
}

fn child_raw<'a>(body: &'a str, tag: &str) -> Option<&'a str> {
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let s = body.find(&open)? + open.len();
    let e = body[s..].find(&close)?;
    Some(&body[s..s + e])
}

/// Whitespace-collapsed text of a child element.
fn child(body: &str, tag: &str) -> Option<String> {
    child_raw(body, tag).map(|s| s.split_whitespace().collect::<Vec<_>>().join(" "))
}

fn strip_block(text: &str, tag: &str) -> String {
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(s) = rest.find(&open) {
        match rest[s..].find(&close) {
            Some(e) => {
                out.push_str(&rest[..s]);
                rest = &rest[s + e + close.len()..];
            }
            None => break,
        }
    }
    out.push_str(rest);
    out
}

/// Render a message in the exact block layout of the execution prompt.
pub fn render_protocol(msg: &ProtocolMessage) -> String {
    match msg {
        ProtocolMessage::Call(c) => render_call("Call", c),
        ProtocolMessage::EndCall(c) => render_call("EndCall", c),
        ProtocolMessage::NoCall(n) => format!(
            "<NoCall>\n    <Purpose>{}</Purpose>\n    <Category>{}</Category>\n    <Anatomy>{}</Anatomy>\n    \
             <Modality>{}</Modality>\n    <Ability>{}</Ability>\n</NoCall>",
            n.purpose,
            n.category.nocall_name(),
            n.anatomy.map_or("Universal", |a| a.name()),
            n.modality.map_or("Universal", |m| m.name()),
            n.ability.name()
        ),
        ProtocolMessage::ParseFailure { reason } => reason.clone(),
    }
}

fn render_call(tag: &str, c: &CallBlock) -> String {
    format!(
        "<{tag}>\n    <Purpose>{}</Purpose>\n    <Tool>{}</Tool>\n    <Input>{}</Input>\n</{tag}>",
        c.purpose,
        c.tool,
        render_key_list(&c.inputs)
    )
}
