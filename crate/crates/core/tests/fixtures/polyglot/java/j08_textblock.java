public class j08_textblock {
    static final String DOC = """
import ghost.Inside;
""";
}
import real.Thing;
