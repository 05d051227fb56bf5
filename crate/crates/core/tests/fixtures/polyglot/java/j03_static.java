import static org.junit.Assert.assertEquals;
import static java.lang.Math.*;

public class j03_static {}
