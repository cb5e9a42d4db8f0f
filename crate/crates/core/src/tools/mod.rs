//! Tool categories, information keys and tool cards.

mod card;
mod category;
mod info_key;
mod signature;

pub use card::{
    parse_tool_card, Applicability, LabelKind, Performance, Scope, ToolCard, ToolCardJson, ToolError,
};
pub use category::{ToolCategory, UnknownCategory, Variant};
pub use info_key::{render_key_list, scan_keys, InfoKey, UnknownKey};
pub use signature::{category_signature, CategorySignature, REPORT_OPTIONAL};
