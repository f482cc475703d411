import org.python.util.PythonInterpreter;

public class Embed {
    public static void main(String[] args) {
        PythonInterpreter interp = new PythonInterpreter();
        interp.exec("print('hello from python')"); // expect-site
    }
}
