pub fn watch() -> u32 { 7 }
