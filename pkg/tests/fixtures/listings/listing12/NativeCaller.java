public class NativeCaller {
    public static void main(String[] args) {
        NativeMethod nativeMethod = new NativeMethod();
        nativeMethod.sayHello();
    }
}
