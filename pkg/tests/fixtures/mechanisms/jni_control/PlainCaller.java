public class PlainCaller {
    public static void main(String[] args) {
        PlainMethod plainMethod = new PlainMethod();
        plainMethod.sayHello();
    }
}
