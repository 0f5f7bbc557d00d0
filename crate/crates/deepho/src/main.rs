fn main() {
    deepho::cli_main();
}
