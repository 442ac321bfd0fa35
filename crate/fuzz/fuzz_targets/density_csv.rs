#![no_main]
use libfuzzer_sys::fuzz_target;
use perronpoly::PiecewiseDensity;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(pd) = PiecewiseDensity::from_csv_str(text) {
        let written = pd.to_csv_string();
        let again = PiecewiseDensity::from_csv_str(&written).expect("written CSV parses");
        assert_eq!(again.to_csv_string(), written);
    }
});
