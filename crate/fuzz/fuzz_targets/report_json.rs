#![no_main]

use libfuzzer_sys::fuzz_target;
use pacf_audit::audit::AuditReport;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(report) = AuditReport::from_json(text) {
        let _ = report.to_markdown();
    }
});
