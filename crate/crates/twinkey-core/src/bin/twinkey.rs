fn main() {
    // populated once the harness modules land
}
