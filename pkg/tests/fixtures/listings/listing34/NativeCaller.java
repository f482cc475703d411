public class NativeCaller {
    public static void main(String[] args) {
        NativeMethod nativeMethod = new NativeMethod();
        int x = 42;
        int var_a, var_b, var_c = 0, var_d;
        var_a = nativeMethod.getValue();
        System.out.println(x);
        var_b = x / var_a;
        x = x + 1;
        var_c = var_c + var_b;
        System.out.println(x);
        var_d = func(var_c);
        System.out.println(x);
    }

    static int func(int v) {
        return v * 2;
    }
}
