// placeholder; populated after the core crate stabilizes
