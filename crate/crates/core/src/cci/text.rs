use super::{ModificationKind, Scene, SceneObject};

/// "small red rubber cube"
pub fn describe_object(o: &SceneObject) -> String {
    format!("{} {} {} {}", o.size, o.color, o.material, o.shape)
}

/// Instruction sentence for a modification of `scene`. An out-of-range
/// object index renders as "object N" rather than panicking.
pub fn render_instruction(scene: &Scene, kind: &ModificationKind) -> String {
    match *kind {
        ModificationKind::ChangeAttribute { object, value } => {
            let target = scene
                .objects()
                .get(object)
                .map(describe_object)
                .unwrap_or_else(|| format!("object {object}"));
            format!(
                "change the {} of the {} to {}",
                value.attribute().word(),
                target,
                value.word()
            )
        }
        ModificationKind::AddObject { added } => format!("add a {}", describe_object(&added)),
    }
}

/// Descriptive caption listing every object in canonical order.
pub fn render_caption(scene: &Scene) -> String {
    let parts: Vec<String> = scene
        .objects()
        .iter()
        .map(|o| format!("a {}", describe_object(o)))
        .collect();
    match parts.as_slice() {
        [] => "an empty scene".to_string(),
        [only] => format!("a scene with {only}"),
        [init @ .., last] => format!("a scene with {} and {}", init.join(", "), last),
    }
}
