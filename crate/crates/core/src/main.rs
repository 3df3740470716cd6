fn main() {
    eprintln!("quatlat: CLI not wired up yet");
    std::process::exit(2);
}
