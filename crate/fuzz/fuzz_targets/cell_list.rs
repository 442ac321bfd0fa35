#![no_main]
use libfuzzer_sys::fuzz_target;
use perronpoly::parse_list;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(list) = parse_list(text) {
        assert!(list.windows(2).all(|w| w[0] < w[1]));
        let joined = list.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        assert_eq!(parse_list(&joined).unwrap(), list);
    }
});
