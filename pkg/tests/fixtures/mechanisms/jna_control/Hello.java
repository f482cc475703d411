public class Hello {
    public static void main(String[] args) {
        int n = Printer.INSTANCE.puts("Hello, World");
        System.out.println(n);
    }
}
