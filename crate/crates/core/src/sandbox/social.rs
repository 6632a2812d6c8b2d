use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SocialKind {
    Chat,
    Post,
    LiveStream,
    InjectedInfo,
}

impl SocialKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SocialKind::Chat => "chat",
            SocialKind::Post => "post",
            SocialKind::LiveStream => "live stream",
            SocialKind::InjectedInfo => "news",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Positive,
    Negative,
    Neutral,
}

const POSITIVE: [&str; 5] = ["recommend", "love", "excellent", "great", "amazing"];
const NEGATIVE: [&str; 6] = ["avoid", "terrible", "awful", "disappointing", "broke", "warn"];

impl Polarity {
    /// Keyword polarity of free text; negative cues win.
    pub fn classify(text: &str) -> Polarity {
        let l = text.to_lowercase();
        if NEGATIVE.iter().any(|w| l.contains(w)) {
            Polarity::Negative
        } else if POSITIVE.iter().any(|w| l.contains(w)) {
            Polarity::Positive
        } else {
            Polarity::Neutral
        }
    }
}

/// A message waiting in an agent's inbox.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocialEvent {
    pub kind: SocialKind,
    /// `None` for harness-authored injections.
    pub sender: Option<u32>,
    pub sender_name: String,
    pub content: String,
    pub product_id: Option<String>,
    pub polarity: Polarity,
    pub round: u32,
}

impl SocialEvent {
    pub fn render(&self) -> String {
        match self.kind {
            SocialKind::InjectedInfo => format!("news: {}", self.content),
            kind => format!("from {} ({}): {}", self.sender_name, kind.as_str(), self.content),
        }
    }
}

/// Default wording of injected social information about `title`.
pub fn injection_text(title: &str, polarity: Polarity) -> String {
    match polarity {
        Polarity::Positive => format!("Everyone says \"{title}\" is excellent, I recommend it."),
        Polarity::Negative => format!("Warning: \"{title}\" is terrible and broke quickly, avoid it."),
        Polarity::Neutral => format!("People are talking about \"{title}\"."),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn injection_texts_classify_as_intended() {
        for p in [Polarity::Positive, Polarity::Negative, Polarity::Neutral] {
            assert_eq!(Polarity::classify(&injection_text("Thing", p)), p);
        }
    }
}
