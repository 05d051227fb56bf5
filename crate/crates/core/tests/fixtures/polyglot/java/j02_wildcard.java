import java.util.*;
import com.google.common.collect.*;

public class j02_wildcard {}
