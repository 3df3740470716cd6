// Acceptance suite: filled in as the library lands.
