class C10 {
    int x = 1;
}
