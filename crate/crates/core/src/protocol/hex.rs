use super::ProtocolError;

/// Space-separated uppercase pairs, e.g. `A5 01 01 12`.
pub fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02X}")).collect::<Vec<_>>().join(" ")
}

/// Accepts whitespace-separated bytes, or one unbroken run of hex digits.
pub fn parse_hex(text: &str) -> Result<Vec<u8>, ProtocolError> {
    let mut out = Vec::new();
    for token in text.split_whitespace() {
        let token = token.strip_prefix("0x").or_else(|| token.strip_prefix("0X")).unwrap_or(token);
        if token.len() % 2 != 0 || !token.bytes().all(|c| c.is_ascii_hexdigit()) {
            return Err(ProtocolError::MalformedHex(token.to_string()));
        }
        for i in (0..token.len()).step_by(2) {
            out.push(u8::from_str_radix(&token[i..i + 2], 16).expect("checked hex digits"));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let bytes = vec![0xA5, 0x01, 0x01, 0x12];
        assert_eq!(to_hex(&bytes), "A5 01 01 12");
        assert_eq!(parse_hex("a5 01\n0112").unwrap(), bytes);
        assert_eq!(parse_hex("").unwrap(), Vec::<u8>::new());
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_hex("A5 1").is_err());
        assert!(parse_hex("ZZ").is_err());
    }
}
