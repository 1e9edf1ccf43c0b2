use std::io::IsTerminal;

/// ANSI styling on stderr, off when `ATTNFLOW_NO_COLOR` is set or stderr is
/// not a terminal.
pub fn enabled() -> bool {
    std::env::var_os("ATTNFLOW_NO_COLOR").is_none() && std::io::stderr().is_terminal()
}

pub fn paint(code: &str, text: &str) -> String {
    if enabled() {
        format!("\x1b[{code}m{text}\x1b[0m")
    } else {
        text.to_string()
    }
}

pub fn error_label() -> String {
    paint("1;31", "error:")
}
