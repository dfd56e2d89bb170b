fn main() {
    irlforge::cli::main();
}
