#![no_main]

use libfuzzer_sys::fuzz_target;
use segcube::pipeline::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let mut config = RunConfig::default();
    if config.apply_file_text(text, None).is_ok() {
        let mut again = RunConfig::default();
        again.apply_file_text(&config.to_config_text(), None).expect("printed config parses");
        assert_eq!(again, config);
        let _ = config.validate();
    }
});
