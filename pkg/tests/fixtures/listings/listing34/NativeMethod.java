public class NativeMethod {
    //Native method declaration
    public native int getValue();

    // Load local C library
    static {
        System.loadLibrary("nativeMethod");
    }
}
