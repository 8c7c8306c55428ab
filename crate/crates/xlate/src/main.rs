use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

fn main() {
    let cancel = Arc::new(AtomicBool::new(false));
    let flag = cancel.clone();
    let _ = ctrlc::set_handler(move || {
        if flag.swap(true, Ordering::SeqCst) {
            std::process::exit(130);
        }
        eprintln!("interrupt: finishing running tasks, press Ctrl-C again to abort");
    });
    std::process::exit(xlate::cli::run(std::env::args_os(), cancel));
}
