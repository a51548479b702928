use serde::{Deserialize, Serialize};

/// An object label with the classifier's confidence in it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedObject {
    pub label: String,
    pub confidence: f64,
}

/// Classifier output for the full image that contains a word.
///
/// Objects are ordered by confidence, highest first; only the first one is
/// used for re-ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualContext {
    pub image_id: String,
    pub objects: Vec<DetectedObject>,
}

impl VisualContext {
    pub fn new(image_id: impl Into<String>, objects: Vec<(&str, f64)>) -> Self {
        let mut ctx = VisualContext {
            image_id: image_id.into(),
            objects: objects
                .into_iter()
                .map(|(label, confidence)| DetectedObject {
                    label: crate::text::normalize(label),
                    confidence,
                })
                .collect(),
        };
        ctx.sort();
        ctx
    }

    /// The most likely object, if any.
    pub fn top(&self) -> Option<&DetectedObject> {
        self.objects.first()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub(crate) fn sort(&mut self) {
        crate::hypothesis::sort_desc(&mut self.objects, |o| o.confidence);
    }
}
